#pragma once

// Monotone upwind finite-difference operator for lambda u + F[u] = 0.
//
// Each node i with a Bellman relation carries, for every control sample a,
// a row  sum_j w[i][a][j] (u_i - u_j) - ell[i][a]  with w >= 0. Rows are
// stored in CSR form with row index r = i * K + a.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hjbvd/grid.hpp"
#include "hjbvd/problem.hpp"

namespace hjbvd {

enum class NodeRole {
    Interior,
    Constraint,  // state-constraint boundary node: inward Bellman rows only
    Dirichlet,   // inward Bellman rows plus the clamp u_i <= g_i
    Neumann,     // oblique row only
};

inline const char* to_string(NodeRole r) {
    switch (r) {
        case NodeRole::Interior: return "interior";
        case NodeRole::Constraint: return "constraint";
        case NodeRole::Dirichlet: return "dirichlet";
        case NodeRole::Neumann: return "neumann";
    }
    return "?";
}

struct StencilEntry {
    std::size_t col;
    double w;
};

struct DiscreteOperator {
    std::string name;
    Grid grid;
    ControlSet controls;
    Coefficients coeffs;  // kept for consistency probes
    BoundaryKind kind = BoundaryKind::StateConstraint;
    std::vector<NodeRole> role;

    std::vector<std::size_t> row_start;  // size N*K + 1
    std::vector<StencilEntry> entries;
    std::vector<double> cost;            // ell, size N*K; unused on Neumann nodes

    std::vector<double> datum;            // g_i on boundary nodes, 0 elsewhere
    std::vector<std::size_t> bnd_start;   // size N + 1; nonempty only on Neumann nodes
    std::vector<StencilEntry> bnd_entries;

    std::size_t n_nodes() const { return grid.size(); }
    std::size_t n_controls() const { return controls.size(); }
    std::size_t row_index(std::size_t node, std::size_t control) const { return node * n_controls() + control; }

    bool has_bellman(std::size_t node) const { return role[node] != NodeRole::Neumann; }

    std::span<const StencilEntry> row(std::size_t r) const {
        return {entries.data() + row_start[r], row_start[r + 1] - row_start[r]};
    }
    std::span<const StencilEntry> boundary_row(std::size_t node) const {
        return {bnd_entries.data() + bnd_start[node], bnd_start[node + 1] - bnd_start[node]};
    }

    /// Total jump rate sum_j w of a Bellman row.
    double rate(std::size_t r) const {
        double s = 0.0;
        for (const auto& e : row(r)) s += e.w;
        return s;
    }
    double boundary_rate(std::size_t node) const {
        double s = 0.0;
        for (const auto& e : boundary_row(node)) s += e.w;
        return s;
    }

    /// sum_j w (u_i - u_j) for row r at node i.
    template <class Vec>
    double apply_row(std::size_t node, std::size_t r, const Vec& u) const {
        double s = 0.0;
        for (const auto& e : row(r)) s += e.w * (u[node] - u[e.col]);
        return s;
    }
    template <class Vec>
    double apply_boundary(std::size_t node, const Vec& u) const {
        double s = 0.0;
        for (const auto& e : boundary_row(node)) s += e.w * (u[node] - u[e.col]);
        return s;
    }

    /// Max over the Bellman rows of all nodes of sum_j w.
    double max_rate() const {
        double m = 0.0;
        for (std::size_t r = 0; r + 1 < row_start.size(); ++r) m = std::max(m, rate(r));
        return m;
    }

    double max_abs_cost() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_nodes(); ++i) {
            if (!has_bellman(i)) continue;
            for (std::size_t a = 0; a < n_controls(); ++a) m = std::max(m, std::abs(cost[row_index(i, a)]));
        }
        return m;
    }

    double max_abs_datum() const {
        double m = 0.0;
        for (double g : datum) m = std::max(m, std::abs(g));
        return m;
    }

    /// Same stencil with running costs and boundary data replaced.
    DiscreteOperator with_data(std::vector<double> new_cost, std::vector<double> new_datum) const {
        if (new_cost.size() != cost.size() || new_datum.size() != datum.size()) {
            throw DomainError("with_data: size mismatch");
        }
        DiscreteOperator out = *this;
        out.cost = std::move(new_cost);
        out.datum = std::move(new_datum);
        return out;
    }

    /// Running cost ell + shift on every Bellman row.
    DiscreteOperator with_cost_shift(double shift) const {
        std::vector<double> c = cost;
        for (double& v : c) v += shift;
        return with_data(std::move(c), datum);
    }
};

struct GridParams {
    std::vector<std::size_t> shape;

    static GridParams uniform(std::size_t dim, std::size_t n) { return {std::vector<std::size_t>(dim, n)}; }
};

namespace detail {

class RowBuilder {
public:
    void add(std::optional<std::size_t> j, double w) {
        if (!j || w == 0.0) return;
        for (auto& e : row_) {
            if (e.col == *j) {
                e.w += w;
                return;
            }
        }
        row_.push_back({*j, w});
    }
    std::vector<StencilEntry>& entries() { return row_; }
    void clear() { row_.clear(); }

private:
    std::vector<StencilEntry> row_;
};

}  // namespace detail

/// Builds the monotone scheme. Second differences are central, with the
/// 7-point splitting for a12 in 2D; first differences are upwind by the sign
/// of each drift component. Jumps that would leave the closed domain are
/// dropped, which realizes the state constraint on Constraint and Dirichlet
/// boundary nodes.
inline DiscreteOperator build_scheme(const ProblemSpec& spec, const GridParams& params) {
    const std::size_t d = spec.dim();
    if (params.shape.size() != d) throw DomainError("grid shape dimension does not match the domain");
    if (spec.controls.samples.empty()) throw DomainError("empty control set");

    DiscreteOperator op;
    op.name = spec.name;
    op.grid = Grid(spec.domain, params.shape);
    op.controls = spec.controls;
    op.coeffs = spec.coeffs;
    op.kind = spec.bc.kind;

    const Grid& g = op.grid;
    const std::size_t N = g.size();
    const std::size_t K = spec.controls.size();
    const Vector& h = g.h();

    op.role.resize(N, NodeRole::Interior);
    op.datum.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        if (!g.is_boundary(i)) continue;
        switch (spec.bc.kind) {
            case BoundaryKind::StateConstraint: op.role[i] = NodeRole::Constraint; break;
            case BoundaryKind::Dirichlet: op.role[i] = NodeRole::Dirichlet; break;
            case BoundaryKind::Neumann: op.role[i] = NodeRole::Neumann; break;
        }
        if (spec.bc.kind != BoundaryKind::StateConstraint) op.datum[i] = spec.bc.g(g.point(i));
    }

    op.row_start.reserve(N * K + 1);
    op.row_start.push_back(0);
    op.cost.assign(N * K, 0.0);
    detail::RowBuilder rb;

    for (std::size_t i = 0; i < N; ++i) {
        const Vector x = g.point(i);
        for (std::size_t a = 0; a < K; ++a) {
            if (op.role[i] == NodeRole::Neumann) {
                op.row_start.push_back(op.entries.size());
                continue;
            }
            const Vector& alpha = spec.controls.samples[a];
            const Matrix A = spec.coeffs.diffusion(x, alpha);
            const Vector b = spec.coeffs.drift(x, alpha);
            op.cost[i * K + a] = spec.coeffs.cost(x, alpha);
            rb.clear();

            double a12 = 0.0;
            double cross = 0.0;
            if (d == 2) {
                a12 = 0.5 * (A(0, 1) + A(1, 0));
                cross = std::abs(a12) / (h[0] * h[1]);
            }
            for (std::size_t k = 0; k < d; ++k) {
                double axis = A(k, k) / (h[k] * h[k]) - cross;
                if (axis < 0.0) {
                    const double scale = std::abs(A(k, k)) / (h[k] * h[k]) + cross;
                    if (axis < -1e-12 * scale) {
                        throw MonotonicityError("diffusion anisotropy exceeds the 7-point stencil reach at node " +
                                                    std::to_string(i) + ", control " + std::to_string(a),
                                                i, a);
                    }
                    axis = 0.0;
                }
                const int e0 = k == 0 ? 1 : 0;
                const int e1 = k == 1 ? 1 : 0;
                rb.add(g.neighbor(i, e0, e1), axis);
                rb.add(g.neighbor(i, -e0, -e1), axis);
                if (b[k] > 0.0) rb.add(g.neighbor(i, e0, e1), b[k] / h[k]);
                if (b[k] < 0.0) rb.add(g.neighbor(i, -e0, -e1), -b[k] / h[k]);
            }
            if (d == 2 && cross > 0.0) {
                if (a12 > 0.0) {
                    rb.add(g.neighbor(i, 1, 1), cross);
                    rb.add(g.neighbor(i, -1, -1), cross);
                } else {
                    rb.add(g.neighbor(i, 1, -1), cross);
                    rb.add(g.neighbor(i, -1, 1), cross);
                }
            }
            for (const auto& e : rb.entries()) op.entries.push_back(e);
            op.row_start.push_back(op.entries.size());
        }
    }

    op.bnd_start.reserve(N + 1);
    op.bnd_start.push_back(0);
    for (std::size_t i = 0; i < N; ++i) {
        if (op.role[i] == NodeRole::Neumann) {
            const Vector x = g.point(i);
            const auto m = g.multi(i);
            rb.clear();
            if (g.boundary_axes(i) == 1) {
                const Vector n = g.outward_normal(i);
                const Vector gamma = spec.bc.direction(x, n);
                for (std::size_t k = 0; k < d; ++k) {
                    if (gamma[k] == 0.0) continue;
                    const int s = gamma[k] > 0.0 ? -1 : 1;
                    const auto j = g.neighbor(i, k == 0 ? s : 0, k == 1 ? s : 0);
                    if (!j) throw DomainError("oblique direction points outward along a face at node " + std::to_string(i));
                    rb.add(j, std::abs(gamma[k]) / h[k]);
                }
            } else {
                // Corner: average of the two face relations, normal components only.
                for (std::size_t k = 0; k < d; ++k) {
                    Vector nk = Vector::Zero(d);
                    nk[k] = m[k] == 0 ? -1.0 : 1.0;
                    const double gk = spec.bc.direction(x, nk).dot(nk);
                    const int s = m[k] == 0 ? 1 : -1;
                    rb.add(g.neighbor(i, k == 0 ? s : 0, k == 1 ? s : 0), 0.5 * std::abs(gk) / h[k]);
                }
            }
            for (const auto& e : rb.entries()) op.bnd_entries.push_back(e);
        }
        op.bnd_start.push_back(op.bnd_entries.size());
    }
    return op;
}

struct MonotonicityReport {
    bool passed = true;
    double min_weight = std::numeric_limits<double>::infinity();
    std::size_t node = 0;
    std::size_t control = 0;
    std::size_t neighbor = 0;
    bool in_boundary_row = false;
    std::size_t entries_checked = 0;
};

/// Minimum off-diagonal weight over all Bellman and boundary rows.
inline MonotonicityReport check_monotonicity(const DiscreteOperator& op) {
    MonotonicityReport rep;
    const std::size_t K = op.n_controls();
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        for (std::size_t a = 0; a < K; ++a) {
            for (const auto& e : op.row(op.row_index(i, a))) {
                ++rep.entries_checked;
                if (e.w < rep.min_weight) {
                    rep.min_weight = e.w;
                    rep.node = i;
                    rep.control = a;
                    rep.neighbor = e.col;
                    rep.in_boundary_row = false;
                }
            }
        }
        for (const auto& e : op.boundary_row(i)) {
            ++rep.entries_checked;
            if (e.w < rep.min_weight) {
                rep.min_weight = e.w;
                rep.node = i;
                rep.control = 0;
                rep.neighbor = e.col;
                rep.in_boundary_row = true;
            }
        }
    }
    if (rep.entries_checked == 0) rep.min_weight = 0.0;
    rep.passed = rep.min_weight >= 0.0;
    return rep;
}

/// Smooth test function with derivatives, for consistency probes.
struct TestFunction {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
};

struct ConsistencyReport {
    double max_error = 0.0;
    std::size_t node = 0;
    std::size_t control = 0;
};

/// max over interior nodes and controls of
/// |sum_j w (u_i - u_j) - (-tr a D2u - b.Du)(x_i)|.
inline ConsistencyReport consistency_probe(const DiscreteOperator& op, const TestFunction& fn) {
    ConsistencyReport rep;
    const std::size_t N = op.n_nodes();
    std::vector<double> u(N);
    for (std::size_t i = 0; i < N; ++i) u[i] = fn.value(op.grid.point(i));
    for (std::size_t i = 0; i < N; ++i) {
        if (op.role[i] != NodeRole::Interior) continue;
        const Vector x = op.grid.point(i);
        const Vector du = fn.gradient(x);
        const Matrix d2u = fn.hessian(x);
        for (std::size_t a = 0; a < op.n_controls(); ++a) {
            const Vector& alpha = op.controls.samples[a];
            const Matrix A = op.coeffs.diffusion(x, alpha);
            const double exact = -(A.array() * d2u.transpose().array()).sum() - op.coeffs.drift(x, alpha).dot(du);
            const double err = std::abs(op.apply_row(i, op.row_index(i, a), u) - exact);
            if (err > rep.max_error) {
                rep.max_error = err;
                rep.node = i;
                rep.control = a;
            }
        }
    }
    return rep;
}

}  // namespace hjbvd
