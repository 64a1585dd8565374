#pragma once

// Discrete discounted problem  lambda u + F_h[u] = 0  with boundary rows:
//   Interior / Constraint : lambda u_i + max_a (sum_j w (u_i - u_j) - ell) = 0
//   Dirichlet             : max(u_i - g_i, Bellman_i) = 0
//   Neumann               : sum_j w^B (u_i - u_j) - g_i = 0

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hjbvd/constants.hpp"
#include "hjbvd/scheme.hpp"

namespace hjbvd {

struct ValueFunction {
    Grid grid;
    std::vector<double> values;
    double lambda = 0.0;
    double residual = 0.0;
    double tol = 0.0;
    std::size_t iterations = 0;
    std::string method;
    /// Largest measured ratio of successive sweep-pair increments (value iteration only).
    double contraction = std::numeric_limits<double>::quiet_NaN();

    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
    double at_center() const { return values[grid.center_node()]; }
};

struct Policy {
    static constexpr std::size_t stop = std::numeric_limits<std::size_t>::max();
    static constexpr std::size_t none = std::numeric_limits<std::size_t>::max() - 1;
    /// Control index per node; `stop` selects the Dirichlet clamp, `none`
    /// marks Neumann nodes which have no control.
    std::vector<std::size_t> control;
};

/// lambda u_i + max_a (sum_j w (u_i - u_j) - ell), first maximizer in `arg`.
template <class Vec>
double bellman_value(const DiscreteOperator& op, double lambda, const Vec& u, std::size_t i,
                     std::size_t* arg = nullptr) {
    const std::size_t K = op.n_controls();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    for (std::size_t a = 0; a < K; ++a) {
        const std::size_t r = i * K + a;
        const double v = op.apply_row(i, r, u) - op.cost[r];
        if (v > best) {
            best = v;
            best_a = a;
        }
    }
    if (arg) *arg = best_a;
    return lambda * u[i] + best;
}

/// Signed residual of the relation carried by node i.
template <class Vec>
double node_residual(const DiscreteOperator& op, double lambda, const Vec& u, std::size_t i) {
    switch (op.role[i]) {
        case NodeRole::Interior:
        case NodeRole::Constraint: return bellman_value(op, lambda, u, i);
        case NodeRole::Dirichlet: return std::max(u[i] - op.datum[i], bellman_value(op, lambda, u, i));
        case NodeRole::Neumann: return op.apply_boundary(i, u) - op.datum[i];
    }
    return 0.0;
}

struct ResidualReport {
    double max_abs = 0.0;
    std::size_t node = 0;
    std::vector<double> per_node;
};

template <class Vec>
ResidualReport bellman_residual(const DiscreteOperator& op, const Vec& u, double lambda) {
    if (static_cast<std::size_t>(u.size()) != op.n_nodes()) throw DomainError("bellman_residual: grid mismatch");
    ResidualReport rep;
    rep.per_node.resize(op.n_nodes());
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        const double r = node_residual(op, lambda, u, i);
        rep.per_node[i] = r;
        if (std::abs(r) > rep.max_abs || !std::isfinite(r)) {
            rep.max_abs = std::isfinite(r) ? std::abs(r) : std::numeric_limits<double>::infinity();
            rep.node = i;
        }
    }
    return rep;
}

inline ResidualReport bellman_residual(const DiscreteOperator& op, const ValueFunction& u, double lambda) {
    return bellman_residual(op, u.values, lambda);
}

/// Gauss-Seidel pseudo-time iteration, alternating sweep direction. Each
/// Bellman node moves by tau_i (lambda u_i + max_a(...)) with
/// tau_i = 1 / (lambda + max_a sum_j w); Neumann rows are solved exactly and
/// the Dirichlet clamp is applied node by node.
inline ValueFunction value_iteration(const DiscreteOperator& op, double lambda, double tol = defaults::value_iteration_tol,
                                     std::size_t max_sweeps = defaults::value_iteration_max_sweeps,
                                     const std::vector<double>* initial = nullptr) {
    if (!(lambda > 0.0)) throw DomainError("value_iteration: lambda must be positive");
    const std::size_t N = op.n_nodes();
    const std::size_t K = op.n_controls();

    std::vector<double> tau(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        if (!op.has_bellman(i)) continue;
        double rmax = 0.0;
        for (std::size_t a = 0; a < K; ++a) rmax = std::max(rmax, op.rate(i * K + a));
        tau[i] = 1.0 / (lambda + rmax);
    }

    std::vector<double> u = initial ? *initial : std::vector<double>(N, 0.0);
    if (u.size() != N) throw DomainError("value_iteration: initial guess size mismatch");

    // A forward+backward pair is one sup-norm contraction; single sweeps of
    // opposite direction are different maps and their increments do not compare.
    double prev_pair = -1.0;
    std::vector<double> pair_start;
    double kappa = 0.0;
    double last_res = std::numeric_limits<double>::infinity();

    auto update = [&](std::size_t i) {
        const double old = u[i];
        double nv;
        if (op.role[i] == NodeRole::Neumann) {
            const double R = op.boundary_rate(i);
            if (R <= 0.0) return;
            double s = op.datum[i];
            for (const auto& e : op.boundary_row(i)) s += e.w * u[e.col];
            nv = s / R;
        } else {
            nv = old - tau[i] * bellman_value(op, lambda, u, i);
            if (op.role[i] == NodeRole::Dirichlet) nv = std::min(nv, op.datum[i]);
        }
        u[i] = nv;
    };

    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        if (sweep % 2 == 1) {
            pair_start = u;
            for (std::size_t i = 0; i < N; ++i) update(i);
        } else {
            for (std::size_t i = N; i-- > 0;) update(i);
        }

        const double res = bellman_residual(op, u, lambda).max_abs;
        last_res = res;
        if (!std::isfinite(res)) break;

        if (sweep % 2 == 0) {
            double scale = 0.0;
            for (double v : u) scale = std::max(scale, std::abs(v));
            // Ratios below the rounding floor carry no information.
            const double floor = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
            double pair_inc = 0.0;
            for (std::size_t i = 0; i < N; ++i) pair_inc = std::max(pair_inc, std::abs(u[i] - pair_start[i]));
            if (prev_pair > floor && pair_inc > floor) kappa = std::max(kappa, pair_inc / prev_pair);
            prev_pair = pair_inc;
        }
        if (res <= tol) {
            ValueFunction vf{op.grid, std::move(u), lambda, res, tol, sweep, "value_iteration", kappa};
            return vf;
        }
    }
    throw ConvergenceError("value_iteration: sweep limit reached", last_res);
}

namespace detail {

inline void assemble_policy_system(const DiscreteOperator& op, double lambda, const Policy& pol,
                                   Eigen::SparseMatrix<double>& M, Eigen::VectorXd& rhs) {
    const std::size_t N = op.n_nodes();
    const std::size_t K = op.n_controls();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(N * 6);
    rhs.resize(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const std::size_t a = pol.control[i];
        if (op.role[i] == NodeRole::Neumann) {
            double R = 0.0;
            for (const auto& e : op.boundary_row(i)) {
                trip.emplace_back(ii, static_cast<Eigen::Index>(e.col), -e.w);
                R += e.w;
            }
            trip.emplace_back(ii, ii, R);
            rhs[ii] = op.datum[i];
        } else if (a == Policy::stop) {
            trip.emplace_back(ii, ii, 1.0);
            rhs[ii] = op.datum[i];
        } else {
            const std::size_t r = i * K + a;
            double R = 0.0;
            for (const auto& e : op.row(r)) {
                trip.emplace_back(ii, static_cast<Eigen::Index>(e.col), -e.w);
                R += e.w;
            }
            trip.emplace_back(ii, ii, lambda + R);
            rhs[ii] = op.cost[r];
        }
    }
    M.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
}

/// rhs - M u for the policy system, evaluated on differences u_i - u_j so
/// that a large constant level in u does not cancel.
inline Eigen::VectorXd policy_defect(const DiscreteOperator& op, double lambda, const Policy& pol,
                                     const Eigen::VectorXd& u) {
    const std::size_t K = op.n_controls();
    Eigen::VectorXd r(u.size());
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const std::size_t a = pol.control[i];
        if (op.role[i] == NodeRole::Neumann) r[ii] = op.datum[i] - op.apply_boundary(i, u);
        else if (a == Policy::stop) r[ii] = op.datum[i] - u[ii];
        else {
            const std::size_t row = i * K + a;
            r[ii] = op.cost[row] - (lambda * u[ii] + op.apply_row(i, row, u));
        }
    }
    return r;
}

/// Residual of node i under the action `a` of a policy.
template <class Vec>
double action_residual(const DiscreteOperator& op, double lambda, const Vec& u, std::size_t i, std::size_t a) {
    if (a == Policy::stop) return u[i] - op.datum[i];
    const std::size_t r = i * op.n_controls() + a;
    return lambda * u[i] + op.apply_row(i, r, u) - op.cost[r];
}

}  // namespace detail

/// Greedy policy with respect to u (first maximizer; Dirichlet nodes may stop).
template <class Vec>
Policy greedy_policy(const DiscreteOperator& op, double lambda, const Vec& u) {
    Policy pol;
    pol.control.resize(op.n_nodes(), 0);
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (op.role[i] == NodeRole::Neumann) {
            pol.control[i] = Policy::none;
            continue;
        }
        std::size_t a = 0;
        const double q = bellman_value(op, lambda, u, i, &a);
        pol.control[i] = a;
        if (op.role[i] == NodeRole::Dirichlet && u[i] - op.datum[i] > q) pol.control[i] = Policy::stop;
    }
    return pol;
}

struct PolicyResult {
    ValueFunction value;
    Policy policy;
};

/// Howard's algorithm: exact sparse evaluation of the current policy, then
/// switch each node to its maximal-residual action when that beats the
/// current one by more than a rounding margin.
inline PolicyResult policy_iteration(const DiscreteOperator& op, double lambda, double tol = defaults::policy_iteration_tol,
                                     std::size_t max_iter = defaults::policy_iteration_max_iter,
                                     const Policy* initial = nullptr) {
    if (!(lambda > 0.0)) throw DomainError("policy_iteration: lambda must be positive");
    const std::size_t N = op.n_nodes();
    const std::size_t K = op.n_controls();

    Policy pol = initial ? *initial : greedy_policy(op, lambda, std::vector<double>(N, 0.0));
    if (pol.control.size() != N) throw DomainError("policy_iteration: initial policy size mismatch");
    for (std::size_t i = 0; i < N; ++i) {
        // Repair entries that do not fit the node role.
        if (op.role[i] == NodeRole::Neumann) pol.control[i] = Policy::none;
        else if (pol.control[i] == Policy::stop && op.role[i] != NodeRole::Dirichlet) pol.control[i] = 0;
        else if (pol.control[i] != Policy::stop && pol.control[i] >= K) pol.control[i] = 0;
    }

    Eigen::SparseMatrix<double> M;
    Eigen::VectorXd rhs;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    Eigen::VectorXd u;
    const double scale = 1.0 + op.max_abs_cost() / lambda + op.max_abs_datum();
    const double rate = lambda + op.max_rate() + [&] {
        double m = 0.0;
        for (std::size_t i = 0; i < N; ++i) m = std::max(m, op.boundary_rate(i));
        return m;
    }();

    for (std::size_t it = 1; it <= max_iter; ++it) {
        detail::assemble_policy_system(op, lambda, pol, M, rhs);
        lu.compute(M);
        if (lu.info() != Eigen::Success) throw SolverError("policy evaluation: sparse factorization failed");
        u = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !u.allFinite()) throw SolverError("policy evaluation: solve failed");
        // Refinement on the difference-form defect; it stops once the
        // correction no longer shrinks.
        double last = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            const Eigen::VectorXd du = lu.solve(detail::policy_defect(op, lambda, pol, u));
            const double size = du.cwiseAbs().maxCoeff();
            if (!(size < last)) break;
            u += du;
            last = size;
        }

        // Switch only on improvements above the rounding level of a row evaluation.
        const double margin = 256.0 * std::numeric_limits<double>::epsilon() *
                              (rate * std::max(1.0, u.cwiseAbs().maxCoeff()) + op.max_abs_cost() + op.max_abs_datum());
        bool changed = false;
        for (std::size_t i = 0; i < N; ++i) {
            if (op.role[i] == NodeRole::Neumann) continue;
            const double cur = detail::action_residual(op, lambda, u, i, pol.control[i]);
            std::size_t best_a = Policy::stop;
            double best = -std::numeric_limits<double>::infinity();
            if (op.role[i] == NodeRole::Dirichlet) best = u[i] - op.datum[i];
            for (std::size_t a = 0; a < K; ++a) {
                const double q = detail::action_residual(op, lambda, u, i, a);
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            if (best > cur + margin) {
                pol.control[i] = best_a;
                changed = true;
            }
        }
        if (!changed) {
            std::vector<double> vals(u.data(), u.data() + u.size());
            const double res = bellman_residual(op, vals, lambda).max_abs;
            // A stable policy is only certified up to the switching margin.
            if (res > tol * (1.0 + lambda * scale) + margin) {
                throw ConvergenceError("policy_iteration: stable policy but residual above tolerance", res);
            }
            ValueFunction vf{op.grid, std::move(vals), lambda, res, tol, it, "policy_iteration", std::numeric_limits<double>::quiet_NaN()};
            return {std::move(vf), std::move(pol)};
        }
    }
    std::vector<double> vals(u.data(), u.data() + u.size());
    throw ConvergenceError("policy_iteration: iteration limit reached", bellman_residual(op, vals, lambda).max_abs);
}

/// Default discounted solve (policy iteration) for the deviation u = v - kappa / lambda
/// with kappa the smallest Bellman-row cost. Constants are annihilated by
/// every stencil, so u solves the same scheme with cost ell - kappa and
/// Dirichlet data g - kappa / lambda. A cost shift by s moves kappa by s and
/// leaves the linear systems unchanged up to one rounding, which keeps
/// v + s / lambda reproducible for small lambda.
inline ValueFunction solve_discounted(const DiscreteOperator& op, double lambda, double tol = defaults::policy_iteration_tol,
                                      const Policy* warm = nullptr, Policy* policy_out = nullptr) {
    if (!(lambda > 0.0)) throw DomainError("solve_discounted: lambda must be positive");
    double kappa = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (!op.has_bellman(i)) continue;
        for (std::size_t a = 0; a < op.n_controls(); ++a) kappa = std::min(kappa, op.cost[op.row_index(i, a)]);
    }
    if (!std::isfinite(kappa) || kappa == 0.0) {
        auto res = policy_iteration(op, lambda, tol, defaults::policy_iteration_max_iter, warm);
        if (policy_out) *policy_out = std::move(res.policy);
        return std::move(res.value);
    }
    std::vector<double> cost = op.cost;
    for (double& c : cost) c -= kappa;
    std::vector<double> datum = op.datum;
    const double level = kappa / lambda;
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (op.role[i] == NodeRole::Dirichlet) datum[i] -= level;
    }
    auto res = policy_iteration(op.with_data(std::move(cost), std::move(datum)), lambda, tol,
                                defaults::policy_iteration_max_iter, warm);
    ValueFunction v = std::move(res.value);
    for (double& x : v.values) x += level;
    v.residual = bellman_residual(op, v.values, lambda).max_abs;
    if (policy_out) *policy_out = std::move(res.policy);
    return v;
}

// ---------------------------------------------------------------------------
// A-priori bounds on subsolutions

/// Dirichlet bound for subsolutions with running cost t (ell + chi) and
/// boundary data psi: lambda u <= max{ t max_i(chi_i - F_h(x_i,0,0)), lambda max psi }
/// where F_h(x_i,0,0) = -min_a ell[i][a].
inline double dirichlet_subsolution_bound(const DiscreteOperator& op, double lambda, double t,
                                          const std::vector<double>& chi, const std::vector<double>& psi) {
    const std::size_t K = op.n_controls();
    double interior = -std::numeric_limits<double>::infinity();
    double boundary = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (op.has_bellman(i)) {
            double lmin = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < K; ++a) lmin = std::min(lmin, op.cost[i * K + a]);
            interior = std::max(interior, t * (chi[i] + lmin));
        }
        if (op.role[i] == NodeRole::Dirichlet) boundary = std::max(boundary, lambda * psi[i]);
    }
    return std::max(interior, boundary);
}

/// Nonnegative discrete function with oblique derivative >= 1 on every
/// Neumann node: a multiple of the squared distance to the domain center.
inline std::vector<double> neumann_barrier(const DiscreteOperator& op) {
    const std::size_t N = op.n_nodes();
    const Vector c = op.grid.box().center();
    std::vector<double> q(N);
    for (std::size_t i = 0; i < N; ++i) q[i] = (op.grid.point(i) - c).squaredNorm();
    double smin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
        if (op.role[i] == NodeRole::Neumann) smin = std::min(smin, op.apply_boundary(i, q));
    }
    if (!std::isfinite(smin)) return std::vector<double>(N, 0.0);
    if (!(smin > 0.0)) throw DomainError("neumann_barrier: oblique rows do not increase toward the boundary");
    for (double& v : q) v /= smin;
    return q;
}

struct NeumannBoundConstants {
    double c1 = 0.0;  // max zeta
    double c2 = 0.0;  // max over s in [0,1] of |F_h[s zeta]|
};

/// F_h[v]_i = max_a (sum_j w (v_i - v_j) - ell) on Bellman nodes.
template <class Vec>
double max_abs_operator(const DiscreteOperator& op, const Vec& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (op.has_bellman(i)) m = std::max(m, std::abs(bellman_value(op, 0.0, v, i)));
    }
    return m;
}

inline NeumannBoundConstants neumann_bound_constants(const DiscreteOperator& op, std::size_t s_samples = 101) {
    NeumannBoundConstants c;
    const auto zeta = neumann_barrier(op);
    for (double z : zeta) c.c1 = std::max(c.c1, z);
    std::vector<double> v(zeta.size());
    for (std::size_t k = 0; k < s_samples; ++k) {
        const double s = static_cast<double>(k) / static_cast<double>(s_samples - 1);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * zeta[i];
        c.c2 = std::max(c.c2, max_abs_operator(op, v));
    }
    return c;
}

/// Neumann bound for subsolutions with running cost t ell + chi and data psi:
/// lambda u <= |chi| + lambda C1 |psi| + C2 max(t, 2|psi|).
inline double neumann_subsolution_bound(const NeumannBoundConstants& c, double lambda, double t, double chi_norm,
                                        double psi_norm) {
    return chi_norm + lambda * c.c1 * psi_norm + c.c2 * std::max(t, 2.0 * psi_norm);
}

}  // namespace hjbvd
