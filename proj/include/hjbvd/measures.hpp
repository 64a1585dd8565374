#pragma once

// Occupation-measure linear programs on the discrete operator.
//
// Variables: mu1 >= 0 on (Bellman node, control) rows, mu2 >= 0 on Dirichlet
// or Neumann boundary nodes. With A0 the jump part of a Bellman row and B
// the oblique row of a Neumann node:
//
//   Green (lambda > 0):  mu1^T (lambda I + A0) + [lambda mu2 | mu2^T B] = lambda e_z
//                        min <mu1, ell> + [lambda <mu2, g> | <mu2, g>]
//   Mather (lambda = 0): mu1^T A0 + [0 | mu2^T B] = 0,  normalized as below
//                        min <mu1, ell> + [0 | <mu2, g>]
//
// The Green balance implies sum mu1 (+ sum mu2 for Dirichlet) = 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hjbvd/constants.hpp"
#include "hjbvd/discount.hpp"
#include "hjbvd/lp.hpp"
#include "hjbvd/scheme.hpp"

namespace hjbvd {

struct MeasurePair {
    std::vector<double> mu1;  // indexed by Bellman row r = node * K + control
    std::vector<double> mu2;  // indexed by node; empty for state constraint
    double lambda_tag = 0.0;
    std::optional<std::size_t> z_tag;
    /// Escaping-mass component of the measure triple; always zero for finite control samples.
    double rho = 0.0;

    double mass1() const {
        double s = 0.0;
        for (double v : mu1) s += v;
        return s;
    }
    double mass2() const {
        double s = 0.0;
        for (double v : mu2) s += v;
        return s;
    }
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective = std::numeric_limits<double>::quiet_NaN();
    MeasurePair measure;
    std::vector<double> dual_values;
    std::size_t iterations = 0;
    double primal_residual = 0.0;
    double complementarity_residual = 0.0;
    std::vector<std::size_t> basis;
};

/// Column layout shared by the measure LPs.
struct MeasureLayout {
    std::vector<std::size_t> mu1_rows;   // LP column -> Bellman row r
    std::vector<std::size_t> mu2_nodes;  // LP column (offset by mu1_rows.size()) -> node

    std::size_t n_cols() const { return mu1_rows.size() + mu2_nodes.size(); }
};

inline MeasureLayout measure_layout(const DiscreteOperator& op) {
    MeasureLayout lay;
    const std::size_t K = op.n_controls();
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (!op.has_bellman(i)) continue;
        for (std::size_t a = 0; a < K; ++a) lay.mu1_rows.push_back(i * K + a);
    }
    if (op.kind != BoundaryKind::StateConstraint) {
        for (std::size_t i = 0; i < op.n_nodes(); ++i) {
            if (op.role[i] == NodeRole::Dirichlet || op.role[i] == NodeRole::Neumann) lay.mu2_nodes.push_back(i);
        }
    }
    return lay;
}

namespace detail {

inline SparseColumn bellman_column(const DiscreteOperator& op, std::size_t r, double lambda,
                                   std::optional<std::size_t> drop_row = std::nullopt) {
    const std::size_t i = r / op.n_controls();
    SparseColumn col;
    const double diag = lambda + op.rate(r);
    if (diag != 0.0 && drop_row != i) col.entries.emplace_back(i, diag);
    for (const auto& e : op.row(r)) {
        if (drop_row == e.col) continue;
        col.entries.emplace_back(e.col, -e.w);
    }
    return col;
}

inline SparseColumn oblique_column(const DiscreteOperator& op, std::size_t b,
                                   std::optional<std::size_t> drop_row = std::nullopt) {
    SparseColumn col;
    if (drop_row != b) col.entries.emplace_back(b, op.boundary_rate(b));
    for (const auto& e : op.boundary_row(b)) {
        if (drop_row == e.col) continue;
        col.entries.emplace_back(e.col, -e.w);
    }
    return col;
}

inline MeasurePair unpack(const DiscreteOperator& op, const MeasureLayout& lay, const std::vector<double>& x) {
    MeasurePair mp;
    mp.mu1.assign(op.n_nodes() * op.n_controls(), 0.0);
    for (std::size_t c = 0; c < lay.mu1_rows.size(); ++c) mp.mu1[lay.mu1_rows[c]] = x[c];
    if (op.kind != BoundaryKind::StateConstraint) {
        mp.mu2.assign(op.n_nodes(), 0.0);
        for (std::size_t c = 0; c < lay.mu2_nodes.size(); ++c) mp.mu2[lay.mu2_nodes[c]] = x[lay.mu1_rows.size() + c];
    }
    return mp;
}

inline LpSolution to_solution(const DiscreteOperator& op, const MeasureLayout& lay, const StandardLpResult& r,
                              const char* what) {
    if (r.status != LpStatus::Optimal) {
        throw SolverError(std::string(what) + ": LP terminated with status " + to_string(r.status));
    }
    LpSolution s;
    s.status = r.status;
    s.objective = r.objective;
    s.measure = unpack(op, lay, r.x);
    s.dual_values = r.duals;
    s.iterations = r.iterations;
    s.primal_residual = r.primal_residual;
    s.complementarity_residual = r.complementarity_residual;
    s.basis = r.basis;
    return s;
}

}  // namespace detail

/// Green LP at reference node z. `crash` receives the policy basis that is
/// primal feasible by the M-matrix property of (lambda I + A0_pi)^T.
inline StandardLp green_lp(const DiscreteOperator& op, std::size_t z, double lambda, const MeasureLayout& lay,
                           std::vector<std::size_t>* crash = nullptr) {
    if (!(lambda > 0.0)) throw DomainError("green_lp: lambda must be positive");
    if (z >= op.n_nodes()) throw DomainError("green_lp: reference node out of range");
    const std::size_t N = op.n_nodes();
    StandardLp lp;
    lp.rows = N;
    lp.rhs.assign(N, 0.0);
    lp.rhs[z] = lambda;
    for (std::size_t r : lay.mu1_rows) {
        lp.cols.push_back(detail::bellman_column(op, r, lambda));
        lp.cost.push_back(op.cost[r]);
    }
    for (std::size_t b : lay.mu2_nodes) {
        if (op.role[b] == NodeRole::Dirichlet) {
            SparseColumn col;
            col.entries.emplace_back(b, lambda);
            lp.cols.push_back(std::move(col));
            lp.cost.push_back(lambda * op.datum[b]);
        } else {
            lp.cols.push_back(detail::oblique_column(op, b));
            lp.cost.push_back(op.datum[b]);
        }
    }
    if (crash) {
        crash->assign(N, 0);
        std::vector<std::size_t> first_col(N, lay.n_cols());
        for (std::size_t c = 0; c < lay.mu1_rows.size(); ++c) {
            const std::size_t i = lay.mu1_rows[c] / op.n_controls();
            if (first_col[i] == lay.n_cols()) first_col[i] = c;
        }
        for (std::size_t c = 0; c < lay.mu2_nodes.size(); ++c) first_col[lay.mu2_nodes[c]] = lay.mu1_rows.size() + c;
        for (std::size_t i = 0; i < N; ++i) (*crash)[i] = first_col[i];
    }
    return lp;
}

/// lambda v^lambda(z) as the optimum of the Green LP; the Green measure of
/// the continuous theory is lambda^{-1} times the returned measure. A
/// discounted policy, when given, seeds the basis: its occupation measure is
/// feasible for every z, and optimality is still certified by full pricing.
inline LpSolution green_measure(const DiscreteOperator& op, std::size_t z, double lambda, const LpOptions& opt = {},
                                const Policy* warm = nullptr) {
    const auto lay = measure_layout(op);
    std::vector<std::size_t> crash;
    const StandardLp lp = green_lp(op, z, lambda, lay, &crash);
    if (warm) {
        if (warm->control.size() != op.n_nodes()) throw DomainError("green_measure: policy size mismatch");
        std::vector<std::size_t> col_of_row(op.n_nodes() * op.n_controls(), lay.n_cols());
        for (std::size_t c = 0; c < lay.mu1_rows.size(); ++c) col_of_row[lay.mu1_rows[c]] = c;
        std::vector<std::size_t> col_of_bnd(op.n_nodes(), lay.n_cols());
        for (std::size_t c = 0; c < lay.mu2_nodes.size(); ++c) col_of_bnd[lay.mu2_nodes[c]] = lay.mu1_rows.size() + c;
        for (std::size_t i = 0; i < op.n_nodes(); ++i) {
            const std::size_t a = warm->control[i];
            const std::size_t col = a < op.n_controls() ? col_of_row[op.row_index(i, a)] : col_of_bnd[i];
            if (col < lay.n_cols()) crash[i] = col;
        }
    }
    auto sol = detail::to_solution(op, lay, solve_standard_form(lp, opt, &crash), "green_measure");
    sol.measure.lambda_tag = lambda;
    sol.measure.z_tag = z;
    return sol;
}

/// Stationary LP. The balance row of the last node is redundant and dropped;
/// its slot carries the normalization (sum mu1, plus sum mu2 for Dirichlet).
inline StandardLp mather_lp(const DiscreteOperator& op, const MeasureLayout& lay) {
    const std::size_t N = op.n_nodes();
    const std::size_t norm_row = N - 1;
    StandardLp lp;
    lp.rows = N;
    lp.rhs.assign(N, 0.0);
    lp.rhs[norm_row] = 1.0;
    for (std::size_t r : lay.mu1_rows) {
        auto col = detail::bellman_column(op, r, 0.0, norm_row);
        col.entries.emplace_back(norm_row, 1.0);
        lp.cols.push_back(std::move(col));
        lp.cost.push_back(op.cost[r]);
    }
    for (std::size_t b : lay.mu2_nodes) {
        if (op.role[b] == NodeRole::Dirichlet) {
            SparseColumn col;
            col.entries.emplace_back(norm_row, 1.0);
            lp.cols.push_back(std::move(col));
            lp.cost.push_back(0.0);
        } else {
            lp.cols.push_back(detail::oblique_column(op, b, norm_row));
            lp.cost.push_back(op.datum[b]);
        }
    }
    return lp;
}

/// Optimal objective equals minus the critical value.
inline LpSolution mather_measure(const DiscreteOperator& op, const LpOptions& opt = {}) {
    const auto lay = measure_layout(op);
    const StandardLp lp = mather_lp(op, lay);
    auto sol = detail::to_solution(op, lay, solve_standard_form(lp, opt), "mather_measure");
    sol.measure.lambda_tag = 0.0;
    return sol;
}

// ---------------------------------------------------------------------------
// Pairings and diagnostics

/// sum_r mu1_r f(node(r)).
inline double pair_nodes(const DiscreteOperator& op, const std::vector<double>& mu1, const std::vector<double>& f) {
    const std::size_t K = op.n_controls();
    double s = 0.0;
    for (std::size_t r = 0; r < mu1.size(); ++r) {
        if (mu1[r] != 0.0) s += mu1[r] * f[r / K];
    }
    return s;
}

/// Pairing of (mu1, mu2) with the generator (phi - lambda u(z), psi) of the dual cone.
inline double cone_pairing(const DiscreteOperator& op, const MeasurePair& mp, double lambda, std::size_t z,
                           const std::vector<double>& phi, const std::vector<double>& psi,
                           const std::vector<double>& u) {
    double s = 0.0;
    const double luz = lambda * u[z];
    for (std::size_t r = 0; r < mp.mu1.size(); ++r) {
        if (mp.mu1[r] != 0.0) s += mp.mu1[r] * (phi[r] - luz);
    }
    if (op.kind == BoundaryKind::Dirichlet) {
        for (std::size_t b = 0; b < mp.mu2.size(); ++b) {
            if (mp.mu2[b] != 0.0) s += lambda * mp.mu2[b] * (psi[b] - u[z]);
        }
    } else if (op.kind == BoundaryKind::Neumann) {
        for (std::size_t b = 0; b < mp.mu2.size(); ++b) {
            if (mp.mu2[b] != 0.0) s += mp.mu2[b] * psi[b];
        }
    }
    return s;
}

struct MembershipViolation {
    std::size_t sample;
    double pairing;
};

struct MembershipReport {
    std::size_t samples = 0;
    double min_pairing = std::numeric_limits<double>::infinity();
    double canonical_slack = 0.0;
    std::vector<MembershipViolation> violations;
    std::uint64_t seed = 0;

    bool ok() const { return violations.empty(); }
};

namespace detail {

/// Smooth random field on the grid with sup-norm at most `bound`.
inline std::vector<double> random_field(const Grid& g, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_real_distribution<double> P(0.0, 2.0 * std::numbers::pi);
    const std::size_t modes = 3;
    std::vector<double> amp(modes * g.dim()), phase(modes * g.dim());
    double total = 0.0;
    for (std::size_t k = 0; k < amp.size(); ++k) {
        amp[k] = U(rng);
        phase[k] = P(rng);
        total += std::abs(amp[k]);
    }
    const double level = bound * 0.5 * (1.0 + U(rng));
    std::vector<double> f(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vector x = g.point(i);
        double s = 0.0;
        for (std::size_t d = 0; d < g.dim(); ++d) {
            const double w = (x[d] - g.box().lo[d]) / (g.box().hi[d] - g.box().lo[d]);
            for (std::size_t k = 0; k < modes; ++k) {
                const std::size_t idx = d * modes + k;
                s += amp[idx] * std::cos(std::numbers::pi * static_cast<double>(k + 1) * w + phase[idx]);
            }
        }
        f[i] = total > 0 ? level * s / total : 0.0;
    }
    return f;
}

}  // namespace detail

/// Truncation level of the sampled cone: M = 10 (1 + |g| + |ell|).
inline double membership_truncation(const DiscreteOperator& op) {
    return 10.0 * (1.0 + op.max_abs_datum() + op.max_abs_cost());
}

/// Samples generators (phi, psi, u) of the dual cone at (z, lambda) and
/// checks the pairing is nonnegative. Each sample draws t in [0.1, 10] and
/// smooth chi, psi below 0.9 t M, solves the discounted problem with running
/// cost t ell + chi and data psi, and lowers the solution by a random
/// positive constant. The canonical generator (ell, g, v^lambda) is sample 0.
/// The violation threshold scales with 1 + |phi|.
inline MembershipReport dual_cone_membership(const MeasurePair& mp, const DiscreteOperator& op, std::size_t z,
                                             double lambda, std::size_t n_samples = defaults::membership_samples,
                                             std::uint64_t seed = defaults::seed,
                                             double tol = defaults::membership_violation_tol) {
    if (mp.mu1.size() != op.n_nodes() * op.n_controls()) throw DomainError("dual_cone_membership: mu1 size mismatch");
    if (op.kind != BoundaryKind::StateConstraint && mp.mu2.size() != op.n_nodes()) {
        throw DomainError("dual_cone_membership: mu2 size mismatch");
    }
    MembershipReport rep;
    rep.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> T(0.1, 10.0);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    const double M = membership_truncation(op);
    const std::size_t N = op.n_nodes();
    const std::size_t K = op.n_controls();

    for (std::size_t s = 0; s <= n_samples; ++s) {
        std::vector<double> phi, psi;
        ValueFunction u;
        if (s == 0) {
            phi = op.cost;
            psi = op.datum;
            u = solve_discounted(op, lambda);
        } else {
            const double t = T(rng);
            const auto chi = detail::random_field(op.grid, 0.9 * t * M, rng);
            psi = detail::random_field(op.grid, 0.9 * t * M, rng);
            phi.assign(N * K, 0.0);
            for (std::size_t i = 0; i < N; ++i) {
                for (std::size_t a = 0; a < K; ++a) phi[i * K + a] = t * op.cost[i * K + a] + chi[i];
                if (op.role[i] != NodeRole::Dirichlet && op.role[i] != NodeRole::Neumann) psi[i] = 0.0;
            }
            u = solve_discounted(op.with_data(phi, psi), lambda);
            double umax = 0.0;
            for (double v : u.values) umax = std::max(umax, std::abs(v));
            const double drop = (0.01 + U01(rng)) * 0.1 * (1.0 + umax);
            for (double& v : u.values) v -= drop;
        }
        double phimax = 0.0;
        for (double v : phi) phimax = std::max(phimax, std::abs(v));
        const double p = cone_pairing(op, mp, lambda, z, phi, psi, u.values);
        if (s == 0) rep.canonical_slack = p;
        rep.min_pairing = std::min(rep.min_pairing, p);
        if (p < -tol * (1.0 + phimax)) rep.violations.push_back({s, p});
        ++rep.samples;
    }
    return rep;
}

struct GapReport {
    double lambda_v_z = 0.0;
    double lp_objective = 0.0;
    double gap = 0.0;
    /// max over support of mu1 of |Bellman row residual of v^lambda| times mu1.
    double complementarity = 0.0;
    double primal_residual = 0.0;
    bool flagged = false;
};

/// |lambda v^lambda(z) - Green LP optimum| with per-row complementary slackness.
inline GapReport duality_gap(const DiscreteOperator& op, std::size_t z, double lambda,
                             const ValueFunction* solved = nullptr, const LpSolution* green = nullptr) {
    GapReport rep;
    const ValueFunction v = solved ? *solved : solve_discounted(op, lambda);
    const LpSolution g = green ? *green : green_measure(op, z, lambda);
    rep.lambda_v_z = lambda * v.values[z];
    rep.lp_objective = g.objective;
    rep.gap = std::abs(rep.lambda_v_z - rep.lp_objective);
    const std::size_t K = op.n_controls();
    for (std::size_t r = 0; r < g.measure.mu1.size(); ++r) {
        const double m = g.measure.mu1[r];
        if (m == 0.0) continue;
        const std::size_t i = r / K;
        const double row = lambda * v.values[i] + op.apply_row(i, r, v.values) - op.cost[r];
        rep.complementarity = std::max(rep.complementarity, m * std::abs(row));
    }
    rep.primal_residual = g.primal_residual;
    rep.flagged = rep.gap > defaults::duality_gap_tol;
    return rep;
}

/// |mu1^T A0 + (mu2^T B)|_inf, the lambda = 0 balance defect of a measure.
inline double stationarity_residual(const DiscreteOperator& op, const MeasurePair& mp) {
    std::vector<double> flow(op.n_nodes(), 0.0);
    const std::size_t K = op.n_controls();
    for (std::size_t r = 0; r < mp.mu1.size(); ++r) {
        const double m = mp.mu1[r];
        if (m == 0.0) continue;
        const std::size_t i = r / K;
        for (const auto& e : op.row(r)) {
            flow[i] += m * e.w;
            flow[e.col] -= m * e.w;
        }
    }
    if (op.kind == BoundaryKind::Neumann) {
        for (std::size_t b = 0; b < mp.mu2.size(); ++b) {
            const double m = mp.mu2[b];
            if (m == 0.0) continue;
            for (const auto& e : op.boundary_row(b)) {
                flow[b] += m * e.w;
                flow[e.col] -= m * e.w;
            }
        }
    }
    double mx = 0.0;
    for (double f : flow) mx = std::max(mx, std::abs(f));
    return mx;
}

// ---------------------------------------------------------------------------
// Mass shift

/// Raises <mu, ell> to m while keeping total mass and the node marginal.
/// alpha_1 is the first control sample with min_x ell(x, alpha_1) * mass > m;
/// nu moves all mass at each node onto alpha_1 and the result is
/// (1 - t) mu + t nu with t = (m - m0) / (m1 - m0).
inline std::vector<double> mass_shift(const std::vector<double>& mu, double m, const DiscreteOperator& op,
                                      double* t_out = nullptr, std::size_t* alpha_out = nullptr) {
    const std::size_t K = op.n_controls();
    const std::size_t N = op.n_nodes();
    if (mu.size() != N * K) throw DomainError("mass_shift: measure size mismatch");
    double mass = 0.0, m0 = 0.0;
    for (std::size_t r = 0; r < mu.size(); ++r) {
        if (mu[r] < 0.0) throw DomainError("mass_shift: negative weight");
        mass += mu[r];
        m0 += mu[r] * op.cost[r];
    }
    if (!(mass > 0.0)) throw DomainError("mass_shift: measure has no mass");
    if (m < m0) throw DomainError("mass_shift: target below the current cost");
    if (m == m0) {
        if (t_out) *t_out = 0.0;
        return mu;
    }

    std::size_t a1 = K;
    for (std::size_t a = 0; a < K && a1 == K; ++a) {
        double lmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < N; ++i) {
            if (op.has_bellman(i)) lmin = std::min(lmin, op.cost[i * K + a]);
        }
        if (lmin * mass > m) a1 = a;
    }
    if (a1 == K) throw CoercivityError("mass_shift: no control sample is expensive enough for the requested cost");

    std::vector<double> nu(mu.size(), 0.0);
    double m1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double node_mass = 0.0;
        for (std::size_t a = 0; a < K; ++a) node_mass += mu[i * K + a];
        nu[i * K + a1] = node_mass;
        m1 += node_mass * op.cost[i * K + a1];
    }
    const double t = (m - m0) / (m1 - m0);
    std::vector<double> out(mu.size());
    for (std::size_t r = 0; r < mu.size(); ++r) out[r] = (1.0 - t) * mu[r] + t * nu[r];
    if (t_out) *t_out = t;
    if (alpha_out) *alpha_out = a1;
    return out;
}

// ---------------------------------------------------------------------------
// Neumann boundary-mass bound

struct BoundaryMassBound {
    double mu2_mass = 0.0;
    double bound = 0.0;
    double c1 = 0.0;
    double eta_sup = 0.0;
};

/// mu2(boundary) <= eps <mu1, ell> + eps C1 + lambda |eta(z)| for a Green
/// measure, with barrier eta = -zeta (zeta from neumann_barrier) and
/// C1 = max over Bellman rows of (A0 eta)/eps - ell.
inline BoundaryMassBound neumann_mass_bound(const DiscreteOperator& op, const MeasurePair& mp, double lambda,
                                            std::size_t z, double eps) {
    if (op.kind != BoundaryKind::Neumann) throw DomainError("neumann_mass_bound: operator is not Neumann");
    if (!(eps > 0.0)) throw DomainError("neumann_mass_bound: eps must be positive");
    BoundaryMassBound b;
    auto eta = neumann_barrier(op);
    for (double& v : eta) v = -v;
    std::vector<double> scaled(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) scaled[i] = eta[i] / eps;
    b.c1 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (op.has_bellman(i)) b.c1 = std::max(b.c1, bellman_value(op, 0.0, scaled, i));
    }
    b.eta_sup = std::abs(eta[z]);
    double l1 = 0.0;
    for (std::size_t r = 0; r < mp.mu1.size(); ++r) l1 += mp.mu1[r] * op.cost[r];
    b.mu2_mass = mp.mass2();
    b.bound = eps * l1 + eps * b.c1 * mp.mass1() + lambda * b.eta_sup * mp.mass1();
    return b;
}

}  // namespace hjbvd
