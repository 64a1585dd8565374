#pragma once

// Critical value of F_h[u] = c under each boundary regime, by three routes:
// vanishing discount, the subsolution LP and the stationary measure LP.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hjbvd/constants.hpp"
#include "hjbvd/discount.hpp"
#include "hjbvd/lp.hpp"
#include "hjbvd/measures.hpp"

namespace hjbvd {

enum class ErgodicMethod { VanishingDiscount, SubsolutionLP, MeasureLP };

inline const char* to_string(ErgodicMethod m) {
    switch (m) {
        case ErgodicMethod::VanishingDiscount: return "vanishing_discount";
        case ErgodicMethod::SubsolutionLP: return "subsolution_lp";
        case ErgodicMethod::MeasureLP: return "measure_lp";
    }
    return "?";
}

enum class Dichotomy { NotApplicable, InteriorRegime, ConstraintRegime };

inline const char* to_string(Dichotomy d) {
    switch (d) {
        case Dichotomy::NotApplicable: return "n/a";
        case Dichotomy::InteriorRegime: return "InteriorRegime";
        case Dichotomy::ConstraintRegime: return "ConstraintRegime";
    }
    return "?";
}

struct ErgodicResult {
    double c = std::numeric_limits<double>::quiet_NaN();
    ValueFunction corrector;
    ErgodicMethod method = ErgodicMethod::VanishingDiscount;
    Dichotomy dichotomy = Dichotomy::NotApplicable;
    std::map<std::string, double> residuals;
    std::vector<std::string> warnings;

    // Vanishing-discount route only.
    std::vector<double> schedule;
    std::vector<ValueFunction> solutions;
    std::vector<double> lambda_v_ref;  // lambda v^lambda at the reference node
    std::size_t reference_node = 0;
    double c_unclamped = std::numeric_limits<double>::quiet_NaN();

    // LP routes.
    std::optional<LpSolution> mather;
    std::optional<InequalityLpResult> subsolution;
};

inline Dichotomy classify(const DiscreteOperator& op, double c) {
    if (op.kind != BoundaryKind::Dirichlet) return Dichotomy::NotApplicable;
    return c > defaults::dichotomy_tol(op.grid.h_max()) ? Dichotomy::ConstraintRegime : Dichotomy::InteriorRegime;
}

/// Signed residual of the ergodic relation at node i. Dirichlet nodes carry
/// max(u - g, F_h[u] - c) in the interior regime and the state-constraint row
/// F_h[u] - c in the constraint regime, where the boundary datum is lost.
template <class Vec>
double ergodic_node_residual(const DiscreteOperator& op, const Vec& u, double c, Dichotomy regime, std::size_t i) {
    switch (op.role[i]) {
        case NodeRole::Interior:
        case NodeRole::Constraint: return bellman_value(op, 0.0, u, i) - c;
        case NodeRole::Dirichlet: {
            const double f = bellman_value(op, 0.0, u, i) - c;
            return regime == Dichotomy::ConstraintRegime ? f : std::max(u[i] - op.datum[i], f);
        }
        case NodeRole::Neumann: return op.apply_boundary(i, u) - op.datum[i];
    }
    return 0.0;
}

struct ErgodicResidual {
    double interior = 0.0;  // max |F_h[u] - c| over interior nodes
    double boundary = 0.0;  // max over boundary nodes of the regime relation
    double max() const { return std::max(interior, boundary); }
};

template <class Vec>
ErgodicResidual ergodic_residual(const DiscreteOperator& op, const Vec& u, double c,
                                 Dichotomy regime = Dichotomy::NotApplicable) {
    ErgodicResidual r;
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        const double v = std::abs(ergodic_node_residual(op, u, c, regime, i));
        if (op.role[i] == NodeRole::Interior) r.interior = std::max(r.interior, v);
        else r.boundary = std::max(r.boundary, v);
    }
    return r;
}

/// Lagrange extrapolation to lambda = 0 through the last three points.
inline double richardson_zero(const std::vector<double>& lam, const std::vector<double>& y) {
    const std::size_t n = lam.size();
    if (n < 3 || y.size() != n) throw DomainError("richardson_zero: need at least three points");
    double out = 0.0;
    for (std::size_t k = n - 3; k < n; ++k) {
        double w = 1.0;
        for (std::size_t j = n - 3; j < n; ++j) {
            if (j != k) w *= (0.0 - lam[j]) / (lam[k] - lam[j]);
        }
        out += w * y[k];
    }
    return out;
}

inline void check_schedule(const std::vector<double>& schedule) {
    if (schedule.size() < 3) throw DomainError("lambda schedule needs at least three entries");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0)) throw DomainError("lambda schedule entries must be positive");
        if (k && !(schedule[k] < schedule[k - 1])) throw DomainError("lambda schedule must be strictly decreasing");
    }
}

/// Solves the discounted problem along the schedule. With jobs > 1 the
/// solves run concurrently; otherwise each solve starts from the previous
/// optimal policy.
inline std::vector<ValueFunction> solve_schedule(const DiscreteOperator& op, const std::vector<double>& schedule,
                                                 unsigned jobs = 1) {
    std::vector<ValueFunction> out(schedule.size());
    if (jobs > 1) {
        std::size_t next = 0;
        while (next < schedule.size()) {
            std::vector<std::future<ValueFunction>> batch;
            for (unsigned j = 0; j < jobs && next < schedule.size(); ++j, ++next) {
                const double lam = schedule[next];
                batch.push_back(std::async(std::launch::async, [&op, lam] { return solve_discounted(op, lam); }));
            }
            const std::size_t base = next - batch.size();
            for (std::size_t j = 0; j < batch.size(); ++j) out[base + j] = batch[j].get();
        }
        return out;
    }
    Policy pol;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        Policy next;
        out[k] = solve_discounted(op, schedule[k], defaults::policy_iteration_tol, k ? &pol : nullptr, &next);
        pol = std::move(next);
    }
    return out;
}

/// c = -lim lambda v^lambda(x_ref), extrapolated over the last three
/// schedule entries; Dirichlet estimates are clamped at zero. The corrector
/// is v^{lambda_min} + c / lambda_min.
inline ErgodicResult critical_value_vanishing_discount(const DiscreteOperator& op, const std::vector<double>& schedule,
                                                       std::optional<std::size_t> reference = std::nullopt,
                                                       unsigned jobs = 1) {
    check_schedule(schedule);
    ErgodicResult res;
    res.method = ErgodicMethod::VanishingDiscount;
    res.schedule = schedule;
    res.reference_node = reference.value_or(op.grid.center_node());
    if (res.reference_node >= op.n_nodes()) throw DomainError("reference node out of range");
    res.solutions = solve_schedule(op, schedule, jobs);

    std::vector<double> neg;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const double lv = schedule[k] * res.solutions[k].values[res.reference_node];
        res.lambda_v_ref.push_back(lv);
        neg.push_back(-lv);
    }
    const double tol = defaults::vanishing_route_tol(op.grid.h_max());
    for (std::size_t k = 2; k < neg.size(); ++k) {
        const double d1 = neg[k - 1] - neg[k - 2];
        const double d2 = neg[k] - neg[k - 1];
        if (d1 * d2 < 0.0 && std::min(std::abs(d1), std::abs(d2)) > tol) {
            res.warnings.push_back("-lambda v^lambda is not monotone along the schedule");
            break;
        }
    }
    res.c_unclamped = richardson_zero(schedule, neg);
    res.c = op.kind == BoundaryKind::Dirichlet ? std::max(res.c_unclamped, 0.0) : res.c_unclamped;
    res.dichotomy = classify(op, res.c);
    res.residuals["extrapolation_step"] = std::abs(res.c_unclamped - neg.back());

    const double lmin = schedule.back();
    ValueFunction u = res.solutions.back();
    for (double& v : u.values) v += res.c / lmin;
    u.lambda = 0.0;
    u.method = "vanishing_discount_corrector";
    const auto er = ergodic_residual(op, u.values, res.c, res.dichotomy);
    res.residuals["ergodic_interior"] = er.interior;
    res.residuals["ergodic_boundary"] = er.boundary;
    u.residual = er.max();
    res.corrector = std::move(u);
    return res;
}

/// Inequality LP: maximize -d over (v, d) subject to
///   sum_j w (v_i - v_j) - d <= ell   for every Bellman row,
///   v_b <= g_b (Dirichlet),  sum_j w^B (v_b - v_j) <= g_b (Neumann).
inline InequalityLp subsolution_lp(const DiscreteOperator& op) {
    const std::size_t N = op.n_nodes();
    const std::size_t K = op.n_controls();
    InequalityLp lp;
    lp.vars = N + 1;
    lp.objective.assign(N + 1, 0.0);
    lp.objective[N] = -1.0;
    for (std::size_t i = 0; i < N; ++i) {
        if (op.has_bellman(i)) {
            for (std::size_t a = 0; a < K; ++a) {
                const std::size_t r = i * K + a;
                std::vector<std::pair<std::size_t, double>> row;
                const double R = op.rate(r);
                if (R != 0.0) row.emplace_back(i, R);
                for (const auto& e : op.row(r)) row.emplace_back(e.col, -e.w);
                row.emplace_back(N, -1.0);
                lp.rows.push_back(std::move(row));
                lp.rhs.push_back(op.cost[r]);
            }
        }
        if (op.role[i] == NodeRole::Dirichlet) {
            lp.rows.push_back({{i, 1.0}});
            lp.rhs.push_back(op.datum[i]);
        } else if (op.role[i] == NodeRole::Neumann) {
            std::vector<std::pair<std::size_t, double>> row;
            row.emplace_back(i, op.boundary_rate(i));
            for (const auto& e : op.boundary_row(i)) row.emplace_back(e.col, -e.w);
            lp.rows.push_back(std::move(row));
            lp.rhs.push_back(op.datum[i]);
        }
    }
    // Without a Dirichlet clamp every row annihilates constants; fix v at node 0.
    if (op.kind != BoundaryKind::Dirichlet) lp.pinned.push_back(0);
    return lp;
}

/// Feasible start: a constant below g (Dirichlet) or a multiple of minus the
/// oblique barrier (Neumann), with d the largest row defect.
inline std::vector<double> subsolution_start(const DiscreteOperator& op) {
    const std::size_t N = op.n_nodes();
    std::vector<double> x(N + 1, 0.0);
    if (op.kind == BoundaryKind::Dirichlet) {
        double gmin = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (op.role[i] == NodeRole::Dirichlet) gmin = std::min(gmin, op.datum[i]);
        }
        for (std::size_t i = 0; i < N; ++i) x[i] = gmin;
    } else if (op.kind == BoundaryKind::Neumann) {
        double gmin = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (op.role[i] == NodeRole::Neumann) gmin = std::min(gmin, op.datum[i]);
        }
        const auto zeta = neumann_barrier(op);
        for (std::size_t i = 0; i < N; ++i) x[i] = gmin * zeta[i];
    }
    double d = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
        if (op.has_bellman(i)) d = std::max(d, bellman_value(op, 0.0, x, i));
    }
    x[N] = d;
    return x;
}

/// c = optimal d (clamped at zero for Dirichlet); the optimal v is a
/// subsolution certificate and is returned as the corrector.
inline ErgodicResult critical_value_subsolution_lp(const DiscreteOperator& op, const LpOptions& opt = {}) {
    ErgodicResult res;
    res.method = ErgodicMethod::SubsolutionLP;
    const InequalityLp lp = subsolution_lp(op);
    auto sol = maximize_inequality_form(lp, subsolution_start(op), opt);
    if (sol.status != LpStatus::Optimal) {
        throw SolverError(std::string("subsolution LP terminated with status ") + to_string(sol.status));
    }
    const std::size_t N = op.n_nodes();
    const double d = sol.x[N];
    res.c_unclamped = d;
    res.c = op.kind == BoundaryKind::Dirichlet ? std::max(d, 0.0) : d;
    res.dichotomy = classify(op, res.c);
    res.residuals["max_violation"] = sol.max_violation;
    res.residuals["iterations"] = static_cast<double>(sol.iterations);
    res.residuals["lineality"] = static_cast<double>(sol.pseudo_rows_left);
    ValueFunction v;
    v.grid = op.grid;
    v.values.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(N));
    v.method = "subsolution_certificate";
    v.residual = sol.max_violation;
    res.corrector = std::move(v);
    res.subsolution = std::move(sol);
    return res;
}

/// c = -(stationary LP optimum). For Dirichlet, reports the interior mass
/// and checks that a positive c_D puts all mass on mu1.
inline ErgodicResult critical_value_measure_lp(const DiscreteOperator& op, const LpOptions& opt = {}) {
    ErgodicResult res;
    res.method = ErgodicMethod::MeasureLP;
    LpSolution sol = mather_measure(op, opt);
    res.c = -sol.objective;
    res.c_unclamped = res.c;
    res.dichotomy = classify(op, res.c);
    res.residuals["primal_residual"] = sol.primal_residual;
    res.residuals["complementarity"] = sol.complementarity_residual;
    res.residuals["mu1_mass"] = sol.measure.mass1();
    res.residuals["stationarity"] = stationarity_residual(op, sol.measure);
    if (op.kind == BoundaryKind::Dirichlet) {
        res.residuals["mu2_mass"] = sol.measure.mass2();
        // c_D (1 - mu1 mass) = 0 at the optimum.
        res.residuals["mass_identity"] = std::abs(res.c * (1.0 - sol.measure.mass1()));
        if (res.dichotomy == Dichotomy::ConstraintRegime && res.residuals["mass_identity"] > 1e-6) {
            res.warnings.push_back("positive c_D with boundary mass in the optimal measure");
        }
    }
    ValueFunction v;
    v.grid = op.grid;
    v.values.assign(op.n_nodes(), 0.0);
    for (std::size_t i = 0; i + 1 < op.n_nodes(); ++i) v.values[i] = sol.dual_values[i];
    v.method = "measure_lp_duals";
    res.corrector = std::move(v);
    res.mather = std::move(sol);
    return res;
}

/// Normalized vanishing-discount iterate v^{lambda_min} + c / lambda_min.
inline ValueFunction corrector(const DiscreteOperator& op, double c, double lambda_min = 1e-3,
                               std::vector<std::string>* warnings = nullptr) {
    ValueFunction u = solve_discounted(op, lambda_min);
    for (double& v : u.values) v += c / lambda_min;
    u.lambda = 0.0;
    u.method = "corrector";
    const auto er = ergodic_residual(op, u.values, c, classify(op, c));
    u.residual = er.max();
    if (warnings && u.residual > 10.0 * (op.grid.h_max() + lambda_min)) {
        warnings->push_back("corrector residual " + std::to_string(u.residual) + " is large; c may not be critical");
    }
    return u;
}

struct RouteComparison {
    ErgodicResult vanishing;
    ErgodicResult subsolution;
    ErgodicResult measure;
    double vanishing_vs_subsolution = 0.0;
    double subsolution_vs_measure = 0.0;
    bool dichotomy_consistent = true;

    bool agree(double h) const {
        return vanishing_vs_subsolution <= defaults::vanishing_route_tol(h) &&
               subsolution_vs_measure <= defaults::lp_route_tol && dichotomy_consistent;
    }
};

inline RouteComparison critical_value_all_routes(const DiscreteOperator& op, const std::vector<double>& schedule,
                                                 std::optional<std::size_t> reference = std::nullopt,
                                                 unsigned jobs = 1) {
    RouteComparison rc;
    rc.vanishing = critical_value_vanishing_discount(op, schedule, reference, jobs);
    rc.subsolution = critical_value_subsolution_lp(op);
    rc.measure = critical_value_measure_lp(op);
    rc.vanishing_vs_subsolution = std::abs(rc.vanishing.c - rc.subsolution.c);
    rc.subsolution_vs_measure = std::abs(rc.subsolution.c - rc.measure.c);
    rc.dichotomy_consistent = rc.vanishing.dichotomy == rc.measure.dichotomy;
    return rc;
}

}  // namespace hjbvd
