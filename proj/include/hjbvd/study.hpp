#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hjbvd/io.hpp"

namespace hjbvd {

struct StudyConfig {
    std::string spec_ref;  // catalog name or config path, recorded in report.json
    /// Nodes per axis. A second entry repeats the study on that grid to
    /// separate h-error from lambda-error.
    std::vector<std::size_t> shapes{defaults::shape_1d};
    std::vector<double> lambda_schedule{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    std::optional<std::size_t> reference_node;  // default: grid center
    std::filesystem::path outputs;              // empty: no artifacts
    unsigned jobs = 1;
    std::uint64_t seed = defaults::seed;
    std::size_t membership_samples = defaults::membership_samples;
};

struct ConvergenceRow {
    double lambda = 0.0;
    double lambda_v_ref = 0.0;
    /// sup |w^lambda - w^lambda_prev| with w = v + c / lambda; NaN on the first row.
    double delta = std::numeric_limits<double>::quiet_NaN();
    double bellman_residual = 0.0;
    double ergodic_residual = 0.0;  // of the normalized iterate at c_used
};

struct ConvergenceTable {
    std::size_t shape = 0;
    double h = 0.0;
    std::vector<ConvergenceRow> rows;
    ValueFunction limit_estimate;  // w at the smallest lambda
    double c_used = 0.0;
    double delta_tol = 0.0;
    bool converged = false;
    bool deltas_monotone = true;  // each delta <= 2 * previous
    std::size_t corner_collar = 0;
    std::vector<std::string> warnings;
};

struct EquicontinuityReport {
    std::vector<double> lambdas;
    std::vector<double> quotients;  // discrete Lipschitz constant per solution
    double max_quotient = 0.0;
    double growth = 1.0;  // quotient at the smallest lambda over the largest
    bool flagged = false;
};

struct SelectionReport {
    double tol = 0.0;
    double reference_pairing = 0.0;  // <mu1, u> for the Green measure at the reference node
    double mather_pairing = 0.0;     // <mu1, u> for the Mather LP vertex
    double reference_stationarity = 0.0;
    bool ok() const { return std::abs(reference_pairing) <= tol && mather_pairing <= tol; }
};

struct UniquenessReport {
    bool applicable = false;
    double difference = 0.0;
    double bound = 0.0;
    bool ok() const { return !applicable || difference <= bound; }
};

struct StudyResult {
    std::string name;
    ConvergenceTable table;
    std::vector<ConvergenceTable> refinement;
    std::vector<double> refinement_limit_diff;  // vs the primary limit at shared nodes, NaN if not nested
    RouteComparison routes;
    Dichotomy dichotomy = Dichotomy::NotApplicable;
    LpSolution reference_measure;  // Green measure at lambda_min and the reference node
    std::size_t reference_node = 0;
    SelectionReport selection;
    UniquenessReport uniqueness;
    EquicontinuityReport equicontinuity;
    MembershipReport membership;
    std::optional<BoundaryMassBound> boundary_mass;
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> artifacts;
};

/// Largest |u_i - u_j| / h_k over axis neighbours.
inline double lipschitz_quotient(const Grid& g, const std::vector<double>& u) {
    double q = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t k = 0; k < g.dim(); ++k) {
            const auto j = g.neighbor(i, k == 0 ? 1 : 0, k == 1 ? 1 : 0);
            if (j) q = std::max(q, std::abs(u[i] - u[*j]) / g.h()[static_cast<Eigen::Index>(k)]);
        }
    }
    return q;
}

/// Flags growth of the Lipschitz quotient as lambda decreases. A single
/// solution reports its own quotient.
inline EquicontinuityReport equicontinuity_probe(const std::vector<ValueFunction>& solutions) {
    if (solutions.empty()) throw DomainError("equicontinuity_probe: no solutions");
    EquicontinuityReport rep;
    const Grid& g = solutions.front().grid;
    for (const auto& s : solutions) {
        if (s.grid.shape() != g.shape() || s.values.size() != g.size()) {
            throw DomainError("equicontinuity_probe: solutions live on different grids");
        }
        rep.lambdas.push_back(s.lambda);
        rep.quotients.push_back(lipschitz_quotient(g, s.values));
    }
    rep.max_quotient = *std::max_element(rep.quotients.begin(), rep.quotients.end());
    const auto [lo, hi] = std::minmax_element(rep.lambdas.begin(), rep.lambdas.end());
    const double q_small = rep.quotients[static_cast<std::size_t>(lo - rep.lambdas.begin())];
    const double q_large = rep.quotients[static_cast<std::size_t>(hi - rep.lambdas.begin())];
    rep.growth = q_large > 0.0 ? q_small / q_large : (q_small > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    // The absolute guard keeps rounding noise on constant solutions quiet.
    rep.flagged = rep.growth > 2.0 && q_small - q_large > 1.0;
    return rep;
}

namespace detail {

inline std::size_t study_collar(const DiscreteOperator& op) {
    return op.grid.dim() == 2 && op.kind == BoundaryKind::Neumann ? 2 : 0;
}

inline double sup_diff(const Grid& g, const std::vector<double>& a, const std::vector<double>& b, std::size_t collar) {
    double d = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (collar && !g.outside_corner_collar(i, collar)) continue;
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

inline std::vector<double> normalized(const ValueFunction& v, double c) {
    std::vector<double> w = v.values;
    for (double& x : w) x += c / v.lambda;
    return w;
}

/// Linear extrapolation to lambda = 0 of the normalized iterates at two
/// discounts; `small` has the smaller lambda.
inline std::vector<double> extrapolate_pair(const ValueFunction& large, const ValueFunction& small, double c) {
    const auto wl = normalized(large, c);
    auto ws = normalized(small, c);
    const double r = small.lambda / (large.lambda - small.lambda);
    for (std::size_t i = 0; i < ws.size(); ++i) ws[i] += r * (ws[i] - wl[i]);
    return ws;
}

inline ConvergenceTable convergence_table(const DiscreteOperator& op, const std::vector<ValueFunction>& sols,
                                          double c, Dichotomy regime, std::size_t ref) {
    ConvergenceTable t;
    t.shape = op.grid.shape().front();
    t.h = op.grid.h_max();
    t.c_used = c;
    t.delta_tol = defaults::study_delta_tol(t.h);
    t.corner_collar = study_collar(op);
    std::vector<double> prev;
    double prev_delta = std::numeric_limits<double>::quiet_NaN();
    for (const auto& v : sols) {
        ConvergenceRow row;
        row.lambda = v.lambda;
        row.lambda_v_ref = v.lambda * v.values[ref];
        row.bellman_residual = v.residual;
        std::vector<double> w = normalized(v, c);
        row.ergodic_residual = ergodic_residual(op, w, c, regime).max();
        if (!prev.empty()) {
            row.delta = sup_diff(op.grid, w, prev, t.corner_collar);
            // Deltas far below the threshold are solve noise, not a trend.
            if (std::isfinite(prev_delta) && row.delta > 2.0 * prev_delta && row.delta > 1e-3 * t.delta_tol) {
                t.deltas_monotone = false;
                t.warnings.push_back("normalized delta at lambda=" + io::lambda_label(v.lambda) +
                                     " exceeds twice the previous delta");
            }
            prev_delta = row.delta;
        }
        t.rows.push_back(row);
        prev = std::move(w);
    }
    ValueFunction lim = sols.back();
    lim.values = std::move(prev);
    lim.lambda = 0.0;
    lim.method = "normalized_limit_estimate";
    lim.residual = t.rows.back().ergodic_residual;
    t.limit_estimate = std::move(lim);
    t.converged = t.rows.size() >= 2 && t.rows.back().delta <= t.delta_tol;
    if (!t.converged) t.warnings.push_back("normalized deltas did not fall below the convergence threshold");
    return t;
}

inline io::json table_json(const ConvergenceTable& t) {
    io::json j;
    j["shape"] = t.shape;
    j["h"] = t.h;
    j["c_used"] = t.c_used;
    j["delta_tol"] = t.delta_tol;
    j["converged"] = t.converged;
    j["deltas_monotone"] = t.deltas_monotone;
    j["corner_collar_cells"] = t.corner_collar;
    j["limit_ergodic_residual"] = t.limit_estimate.residual;
    io::json rows = io::json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"lambda", r.lambda},
                        {"lambda_v_ref", r.lambda_v_ref},
                        {"delta", io::jnum(r.delta)},
                        {"bellman_residual", r.bellman_residual},
                        {"ergodic_residual", r.ergodic_residual}});
    }
    j["rows"] = std::move(rows);
    j["warnings"] = t.warnings;
    return j;
}

/// Limit difference at nodes shared by two nested grids, NaN otherwise.
inline double nested_diff(const Grid& fine, const std::vector<double>& uf, const Grid& coarse,
                          const std::vector<double>& uc) {
    if (fine.dim() != coarse.dim()) return std::numeric_limits<double>::quiet_NaN();
    std::array<std::size_t, 2> step{1, 1};
    for (std::size_t k = 0; k < fine.dim(); ++k) {
        const std::size_t nf = fine.shape()[k] - 1, nc = coarse.shape()[k] - 1;
        if (nf % nc != 0) return std::numeric_limits<double>::quiet_NaN();
        step[k] = nf / nc;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const auto m = coarse.multi(i);
        d = std::max(d, std::abs(uc[i] - uf[fine.index(m[0] * step[0], m[1] * step[1])]));
    }
    return d;
}

inline void write_table_csv(const std::filesystem::path& path, const std::vector<const ConvergenceTable*>& tables) {
    auto f = io::open_out(path);
    f << "shape,h,lambda,lambda_v_ref,delta,bellman_residual,ergodic_residual\n";
    for (const auto* t : tables) {
        for (const auto& r : t->rows) {
            f << t->shape << ',' << io::num(t->h) << ',' << io::num(r.lambda) << ',' << io::num(r.lambda_v_ref) << ','
              << (std::isfinite(r.delta) ? io::num(r.delta) : std::string()) << ',' << io::num(r.bellman_residual)
              << ',' << io::num(r.ergodic_residual) << '\n';
        }
    }
}

}  // namespace detail

/// Full vanishing-discount study on the first shape, plus refinement
/// repeats on the remaining shapes. Artifacts go to cfg.outputs when set;
/// report.json is written before a route disagreement is raised.
inline StudyResult run_study(const ProblemSpec& spec, const StudyConfig& cfg) {
    check_schedule(cfg.lambda_schedule);
    if (cfg.shapes.empty()) throw ConfigError("study: no grid shapes");
    StudyResult res;
    res.name = spec.name;
    const double lmin = cfg.lambda_schedule.back();

    const DiscreteOperator op = build_scheme(spec, GridParams::uniform(spec.domain.dim(), cfg.shapes.front()));
    const std::size_t ref = cfg.reference_node.value_or(op.grid.center_node());
    if (ref >= op.n_nodes()) throw ConfigError("study: reference node out of range");
    res.reference_node = ref;
    const double h = op.grid.h_max();

    res.routes = critical_value_all_routes(op, cfg.lambda_schedule, ref, cfg.jobs);
    const bool agree = res.routes.agree(h);
    // The LP value is exact for the discrete problem, so it normalizes the family.
    const double c = res.routes.subsolution.c;
    res.dichotomy = res.routes.measure.dichotomy;

    io::json report;
    report["problem"] = spec.name;
    report["spec_ref"] = cfg.spec_ref;
    report["boundary"] = to_string(spec.bc.kind);
    report["shapes"] = cfg.shapes;
    report["schedule"] = cfg.lambda_schedule;
    report["reference_node"] = ref;
    report["seed"] = cfg.seed;
    report["routes"] = io::to_json(res.routes);
    report["routes_agree"] = agree;
    report["tolerances"] = {{"vanishing_vs_subsolution", defaults::vanishing_route_tol(h)},
                            {"subsolution_vs_measure", defaults::lp_route_tol}};
    const auto flush = [&] {
        if (cfg.outputs.empty()) return;
        const auto p = cfg.outputs / "report.json";
        io::write_json(p, report);
        if (std::find(res.artifacts.begin(), res.artifacts.end(), p) == res.artifacts.end()) res.artifacts.push_back(p);
    };
    if (!agree) {
        flush();
        char buf[256];
        std::snprintf(buf, sizeof buf, "critical-value routes disagree: vanishing %.9g, subsolution LP %.9g, measure LP %.9g",
                      res.routes.vanishing.c, res.routes.subsolution.c, res.routes.measure.c);
        throw RouteDisagreement(buf);
    }

    const auto& sols = res.routes.vanishing.solutions;
    res.table = detail::convergence_table(op, sols, c, res.dichotomy, ref);
    for (const auto& w : res.table.warnings) res.warnings.push_back(w);
    const double sel_tol = defaults::selection_tol(h, lmin);
    if (res.table.limit_estimate.residual > sel_tol) {
        res.warnings.push_back("limit estimate ergodic residual exceeds max(10h, 10 lambda_min)");
    }

    // Uniqueness shadow: the even- and odd-indexed sub-schedules each
    // extrapolate their last two normalized iterates to lambda = 0.
    if (sols.size() >= 4) {
        res.uniqueness.applicable = true;
        const std::size_t n = sols.size();
        const auto a = detail::extrapolate_pair(sols[n - 3], sols[n - 1], c);
        const auto b = detail::extrapolate_pair(sols[n - 4], sols[n - 2], c);
        res.uniqueness.difference = detail::sup_diff(op.grid, a, b, res.table.corner_collar);
        res.uniqueness.bound = 2.0 * res.table.rows.back().delta + 1e-12;
        if (!res.uniqueness.ok()) res.warnings.push_back("interleaved sub-schedules give different limits");
    }

    // Selection inequality for the Green-limit measure at the reference node.
    res.reference_measure = green_measure(op, ref, lmin);
    const auto& u = res.table.limit_estimate.values;
    res.selection.tol = sel_tol;
    res.selection.reference_pairing = pair_nodes(op, res.reference_measure.measure.mu1, u);
    res.selection.mather_pairing = pair_nodes(op, res.routes.measure.mather->measure.mu1, u);
    res.selection.reference_stationarity = stationarity_residual(op, res.reference_measure.measure);
    if (!res.selection.ok()) res.warnings.push_back("selection inequality violated beyond tolerance");

    res.membership = dual_cone_membership(res.reference_measure.measure, op, ref, lmin, cfg.membership_samples, cfg.seed);
    if (!res.membership.ok()) res.warnings.push_back("sampled dual-cone membership found violations");
    if (op.kind == BoundaryKind::Neumann) {
        res.boundary_mass = neumann_mass_bound(op, res.reference_measure.measure, lmin, ref, 1.0);
    }

    res.equicontinuity = equicontinuity_probe(sols);
    if (res.equicontinuity.flagged) res.warnings.push_back("Lipschitz quotient grows as lambda decreases");

    for (std::size_t s = 1; s < cfg.shapes.size(); ++s) {
        const DiscreteOperator op2 = build_scheme(spec, GridParams::uniform(spec.domain.dim(), cfg.shapes[s]));
        const auto sols2 = solve_schedule(op2, cfg.lambda_schedule, cfg.jobs);
        const double c2 = critical_value_subsolution_lp(op2).c;
        res.refinement.push_back(detail::convergence_table(op2, sols2, c2, classify(op2, c2), op2.grid.center_node()));
        const auto& u2 = res.refinement.back().limit_estimate.values;
        res.refinement_limit_diff.push_back(op2.grid.size() >= op.grid.size()
                                                ? detail::nested_diff(op2.grid, u2, op.grid, u)
                                                : detail::nested_diff(op.grid, u, op2.grid, u2));
    }

    report["dichotomy"] = to_string(res.dichotomy);
    report["c_used"] = c;
    report["convergence_rule"] = "last normalized sup-norm delta <= max(5h, 1e-4)";
    report["table"] = detail::table_json(res.table);
    io::json refs = io::json::array();
    for (std::size_t s = 0; s < res.refinement.size(); ++s) {
        io::json j = detail::table_json(res.refinement[s]);
        j["limit_diff_vs_primary"] = io::jnum(res.refinement_limit_diff[s]);
        refs.push_back(std::move(j));
    }
    report["refinement"] = std::move(refs);
    report["selection"] = {{"tol", res.selection.tol},
                           {"reference_pairing", res.selection.reference_pairing},
                           {"mather_pairing", res.selection.mather_pairing},
                           {"reference_stationarity", res.selection.reference_stationarity},
                           {"ok", res.selection.ok()}};
    report["uniqueness"] = {{"applicable", res.uniqueness.applicable},
                            {"difference", res.uniqueness.difference},
                            {"bound", res.uniqueness.bound},
                            {"ok", res.uniqueness.ok()}};
    report["equicontinuity"] = {{"lambdas", res.equicontinuity.lambdas},
                                {"quotients", res.equicontinuity.quotients},
                                {"growth", io::jnum(res.equicontinuity.growth)},
                                {"flagged", res.equicontinuity.flagged}};
    report["membership"] = io::to_json(res.membership);
    if (res.boundary_mass) {
        report["boundary_mass"] = {{"mu2_mass", res.boundary_mass->mu2_mass}, {"bound", res.boundary_mass->bound}};
    }
    report["mather_measure"] = {{"mu1_mass", res.routes.measure.mather->measure.mass1()},
                                {"mu2_mass", res.routes.measure.mather->measure.mass2()},
                                {"basis_size", res.routes.measure.mather->basis.size()}};
    report["warnings"] = res.warnings;

    if (!cfg.outputs.empty()) {
        const auto& out = cfg.outputs;
        std::vector<const ConvergenceTable*> tables{&res.table};
        for (const auto& t : res.refinement) tables.push_back(&t);
        detail::write_table_csv(out / "table.csv", tables);
        res.artifacts.push_back(out / "table.csv");
        io::write_field_csv(out / "limit.csv", res.table.limit_estimate);
        res.artifacts.push_back(out / "limit.csv");
        io::write_measure_csv(out / "mather_measure.csv", op, res.routes.measure.mather->measure);
        res.artifacts.push_back(out / "mather_measure.csv");
        for (const auto& v : sols) {
            ValueFunction w = v;
            w.values = detail::normalized(v, c);
            const auto p = out / ("profile_" + io::lambda_label(v.lambda) + ".dat");
            io::write_profile_dat(p, w, spec.name + " normalized v + c/lambda, lambda=" + io::lambda_label(v.lambda));
            res.artifacts.push_back(p);
        }
        flush();
    }
    return res;
}

}  // namespace hjbvd
