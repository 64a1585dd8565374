#pragma once

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hjbvd/config.hpp"
#include "hjbvd/study.hpp"

namespace hjbvd::cli {

enum ExitCode : int { Ok = 0, ValidationFailure = 1, SolverFailure = 2, RouteFailure = 3 };

struct Options {
    std::string catalog;
    std::string config;
    double m = 1.0;
    double ell = 3.0;
    std::string bc = "state_constraint";
    double lambda = 0.1;
    std::vector<std::size_t> shape;
    std::size_t controls = 0;  // 0: catalog default
    std::optional<std::size_t> z;
    std::vector<double> schedule{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    std::string out;
    double tol = defaults::policy_iteration_tol;
    double lp_tol = defaults::lp_feasibility_tol;
    std::string format = "csv";
    std::uint64_t seed = defaults::seed;
    unsigned jobs = 1;
};

inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names{"eikonal_1d", "eikonal_2d", "viscous_quadratic_1d", "constant_cost"};
    return names;
}

inline ProblemSpec resolve_problem(const Options& o) {
    if (!o.config.empty()) return load_config(o.config);
    const BoundaryKind kind = parse_boundary_kind(o.bc);
    if (o.catalog == "eikonal_1d") return eikonal_1d(o.m, kind, o.controls ? o.controls : defaults::control_samples);
    if (o.catalog == "eikonal_2d") return eikonal_2d(o.m, kind, o.controls ? o.controls : 16);
    if (o.catalog == "viscous_quadratic_1d") {
        ViscousQuadraticParams p;
        if (o.controls) p.samples = o.controls;
        return viscous_quadratic_1d(kind, p);
    }
    if (o.catalog == "constant_cost") return constant_cost(o.ell, kind);
    std::string known;
    for (const auto& n : catalog_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown catalog problem '" + o.catalog + "' (known: " + known + ")");
}

inline GridParams grid_for(const ProblemSpec& spec, const std::vector<std::size_t>& shape) {
    const std::size_t dim = spec.dim();
    if (shape.empty()) return GridParams::uniform(dim, dim == 1 ? defaults::shape_1d : defaults::shape_2d);
    if (shape.size() == 1) return GridParams::uniform(dim, shape[0]);
    if (shape.size() != dim) throw ConfigError("--shape needs 1 or " + std::to_string(dim) + " entries");
    return GridParams{shape};
}

inline std::filesystem::path output_dir(const Options& o) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("HJBVD_OUTPUT_DIR"); env && *env) return env;
    return "hjbvd_out";
}

inline LpOptions lp_options(const Options& o) {
    LpOptions lp;
    lp.feasibility_tol = o.lp_tol;
    return lp;
}

inline void print_validation(std::ostream& out, const ValidationReport& rep) {
    for (const auto& c : rep.checks) {
        out << (c.passed ? "  ok    " : (c.fatal ? "  FAIL  " : "  warn  ")) << std::left << std::setw(30) << c.name
            << std::right;
        if (!c.detail.empty()) out << ' ' << c.detail;
        out << '\n';
    }
}

inline int cmd_validate(const Options& o, std::ostream& out) {
    const ProblemSpec spec = resolve_problem(o);
    out << "problem " << spec.name << " (" << to_string(spec.bc.kind) << ")\n";
    const ValidationReport rep = validate_spec(spec);
    print_validation(out, rep);
    if (!rep.ok()) {
        for (const auto& c : rep.checks) {
            if (!c.passed && c.fatal) out << "validation failed: " << c.name << '\n';
        }
        return ValidationFailure;
    }
    const DiscreteOperator op = build_scheme(spec, grid_for(spec, o.shape));
    const MonotonicityReport mono = check_monotonicity(op);
    out << "  " << (mono.passed ? "ok    " : "FAIL  ") << std::left << std::setw(30) << "scheme_monotonicity" << std::right
        << " min off-diagonal weight " << mono.min_weight << '\n';
    if (!mono.passed) {
        out << "validation failed: scheme_monotonicity\n";
        return ValidationFailure;
    }
    out << "valid\n";
    return Ok;
}

inline int cmd_solve(const Options& o, std::ostream& out) {
    const ProblemSpec spec = resolve_problem(o);
    const DiscreteOperator op = build_scheme(spec, grid_for(spec, o.shape));
    const ValueFunction v = solve_discounted(op, o.lambda, o.tol);
    const std::size_t z = o.z.value_or(op.grid.center_node());
    if (z >= op.n_nodes()) throw ConfigError("--z out of range");
    const auto dir = output_dir(o);
    const std::string stem = "solution_lambda_" + io::lambda_label(o.lambda);
    std::filesystem::path file;
    if (o.format == "json") {
        file = dir / (stem + ".json");
        io::json j = io::to_json(v);
        j["problem"] = spec.name;
        io::write_json(file, j);
    } else {
        file = dir / (stem + ".csv");
        io::write_field_csv(file, v);
    }
    out << std::setprecision(10);
    out << "problem " << spec.name << ", lambda " << o.lambda << ", " << op.n_nodes() << " nodes\n";
    out << "lambda v(node " << z << ") = " << o.lambda * v.values[z] << '\n';
    out << "residual " << v.residual << " after " << v.iterations << " policy iterations\n";
    out << "wrote " << file.string() << '\n';
    return Ok;
}

inline int cmd_ergodic(const Options& o, std::ostream& out) {
    const ProblemSpec spec = resolve_problem(o);
    const DiscreteOperator op = build_scheme(spec, grid_for(spec, o.shape));
    const std::optional<std::size_t> ref = o.z;
    RouteComparison rc;
    rc.vanishing = critical_value_vanishing_discount(op, o.schedule, ref, o.jobs);
    rc.subsolution = critical_value_subsolution_lp(op, lp_options(o));
    rc.measure = critical_value_measure_lp(op, lp_options(o));
    rc.vanishing_vs_subsolution = std::abs(rc.vanishing.c - rc.subsolution.c);
    rc.subsolution_vs_measure = std::abs(rc.subsolution.c - rc.measure.c);
    rc.dichotomy_consistent = rc.vanishing.dichotomy == rc.measure.dichotomy;
    const auto dir = output_dir(o);
    io::json j = io::to_json(rc);
    j["problem"] = spec.name;
    io::write_json(dir / "ergodic.json", j);
    io::write_field_csv(dir / "corrector.csv", rc.vanishing.corrector);
    out << std::setprecision(10);
    out << "problem " << spec.name << ", " << op.n_nodes() << " nodes\n";
    out << "c (vanishing discount) = " << rc.vanishing.c << '\n';
    out << "c (subsolution LP)     = " << rc.subsolution.c << '\n';
    out << "c (measure LP)         = " << rc.measure.c << '\n';
    if (op.kind == BoundaryKind::Dirichlet) out << "dichotomy: " << to_string(rc.measure.dichotomy) << '\n';
    for (const auto& w : rc.vanishing.warnings) out << "warning: " << w << '\n';
    out << "wrote " << (dir / "ergodic.json").string() << ", " << (dir / "corrector.csv").string() << '\n';
    if (!rc.agree(op.grid.h_max())) {
        out << "routes disagree beyond tolerance\n";
        return RouteFailure;
    }
    return Ok;
}

inline int cmd_measures(const Options& o, std::ostream& out) {
    const ProblemSpec spec = resolve_problem(o);
    const DiscreteOperator op = build_scheme(spec, grid_for(spec, o.shape));
    const std::size_t z = o.z.value_or(op.grid.center_node());
    if (z >= op.n_nodes()) throw ConfigError("--z out of range");
    const LpSolution green = green_measure(op, z, o.lambda, lp_options(o));
    const ValueFunction v = solve_discounted(op, o.lambda, o.tol);
    const GapReport gap = duality_gap(op, z, o.lambda, &v, &green);
    const LpSolution mather = mather_measure(op, lp_options(o));
    const MembershipReport mem = dual_cone_membership(green.measure, op, z, o.lambda, defaults::membership_samples, o.seed);
    const auto dir = output_dir(o);
    if (o.format == "json") {
        const auto measure_json = [&](const LpSolution& s) {
            io::json j;
            j["objective"] = s.objective;
            j["mu1"] = s.measure.mu1;
            j["mu2"] = s.measure.mu2;
            j["iterations"] = s.iterations;
            j["primal_residual"] = s.primal_residual;
            return j;
        };
        io::json j;
        j["problem"] = spec.name;
        j["lambda"] = o.lambda;
        j["z"] = z;
        j["green"] = measure_json(green);
        j["mather"] = measure_json(mather);
        j["duality_gap"] = gap.gap;
        j["membership"] = io::to_json(mem);
        io::write_json(dir / "measures.json", j);
    } else {
        io::write_measure_csv(dir / "green_measure.csv", op, green.measure);
        io::write_measure_csv(dir / "mather_measure.csv", op, mather.measure);
    }
    out << std::setprecision(10);
    out << "problem " << spec.name << ", lambda " << o.lambda << ", z = node " << z << '\n';
    out << "Green LP optimum   = " << green.objective << "  (lambda v(z) = " << gap.lambda_v_z << ", gap " << gap.gap
        << ")\n";
    out << "Mather LP optimum  = " << mather.objective << "  (c = " << -mather.objective << ")\n";
    out << "membership: " << mem.samples << " samples, " << mem.violations.size() << " violations, seed " << mem.seed
        << '\n';
    return gap.flagged ? SolverFailure : Ok;
}

inline int cmd_study(const Options& o, std::ostream& out) {
    const ProblemSpec spec = resolve_problem(o);
    StudyConfig cfg;
    cfg.spec_ref = o.config.empty() ? o.catalog : o.config;
    if (!o.shape.empty()) cfg.shapes = o.shape;
    else cfg.shapes = {spec.dim() == 1 ? defaults::shape_1d : defaults::shape_2d};
    cfg.lambda_schedule = o.schedule;
    cfg.reference_node = o.z;
    cfg.outputs = output_dir(o);
    cfg.jobs = o.jobs;
    cfg.seed = o.seed;
    StudyResult r;
    try {
        r = run_study(spec, cfg);
    } catch (const RouteDisagreement& e) {
        out << e.what() << "\ncomparison report in " << (cfg.outputs / "report.json").string() << '\n';
        return RouteFailure;
    }
    out << std::setprecision(8);
    out << "problem " << spec.name << ", shape " << r.table.shape << ", c = " << r.table.c_used << '\n';
    if (spec.bc.kind == BoundaryKind::Dirichlet) out << "dichotomy: " << to_string(r.dichotomy) << '\n';
    out << std::left << std::setw(12) << "lambda" << std::setw(18) << "lambda v(ref)" << std::setw(16) << "delta"
        << "ergodic residual" << std::right << '\n';
    for (const auto& row : r.table.rows) {
        out << std::left << std::setw(12) << row.lambda << std::setw(18) << row.lambda_v_ref << std::setw(16)
            << (std::isfinite(row.delta) ? std::to_string(row.delta) : std::string("-")) << row.ergodic_residual
            << std::right << '\n';
    }
    out << "converged: " << (r.table.converged ? "yes" : "no") << " (threshold " << r.table.delta_tol << ")\n";
    out << "selection: <mu1,u> = " << r.selection.reference_pairing << " at reference, " << r.selection.mather_pairing
        << " at Mather vertex, tol " << r.selection.tol << '\n';
    for (std::size_t s = 0; s < r.refinement.size(); ++s) {
        out << "refinement shape " << r.refinement[s].shape << ": c = " << r.refinement[s].c_used
            << ", limit diff " << r.refinement_limit_diff[s] << '\n';
    }
    for (const auto& w : r.warnings) out << "warning: " << w << '\n';
    out << "artifacts in " << cfg.outputs.string() << '\n';
    return Ok;
}

/// Entry point; never throws.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Discounted and ergodic HJB solver with occupation-measure LPs", "hjbvd"};
    app.require_subcommand(1);
    Options o;

    const auto add_problem = [&](CLI::App* sc) {
        auto* cat = sc->add_option("--catalog", o.catalog, "Built-in problem")
                        ->check(CLI::IsMember(catalog_names()));
        auto* cfg = sc->add_option("--config", o.config, "Problem config file (TOML)")->check(CLI::ExistingFile);
        cat->excludes(cfg);
        sc->add_option("--m", o.m, "Eikonal level m")->capture_default_str();
        sc->add_option("--ell", o.ell, "constant_cost level")->capture_default_str();
        sc->add_option("--bc", o.bc, "Boundary kind for catalog problems: state_constraint, dirichlet, neumann")
            ->capture_default_str();
        sc->add_option("--shape", o.shape, "Nodes per axis (comma list; study: one grid per entry)")->delimiter(',');
        sc->add_option("--controls", o.controls, "Control samples (1D) or directions (2D)");
        sc->add_option("--tol", o.tol, "Policy iteration tolerance")->capture_default_str();
        sc->add_option("--lp-tol", o.lp_tol, "LP feasibility tolerance")->capture_default_str();
        sc->add_option("--out", o.out, "Output directory (default $HJBVD_OUTPUT_DIR or ./hjbvd_out)");
        sc->add_option("--jobs", o.jobs, "Parallel discounted solves")->check(CLI::PositiveNumber)->capture_default_str();
    };

    auto* validate = app.add_subcommand("validate", "Check the hypotheses on a problem and its scheme");
    add_problem(validate);
    auto* solve = app.add_subcommand("solve", "Solve the discounted problem at one lambda");
    add_problem(solve);
    solve->add_option("--lambda", o.lambda, "Discount")->check(CLI::PositiveNumber)->capture_default_str();
    solve->add_option("--z", o.z, "Reported node (default center)");
    solve->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    auto* ergodic = app.add_subcommand("ergodic", "Critical value by three routes");
    add_problem(ergodic);
    ergodic->add_option("--schedule", o.schedule, "Decreasing lambda list")->delimiter(',');
    ergodic->add_option("--z", o.z, "Reference node (default center)");
    auto* measures = app.add_subcommand("measures", "Green and Mather measures");
    add_problem(measures);
    measures->add_option("--lambda", o.lambda, "Discount")->check(CLI::PositiveNumber)->capture_default_str();
    measures->add_option("--z", o.z, "Reference node (default center)");
    measures->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    measures->add_option("--seed", o.seed, "Membership sampling seed")->capture_default_str();
    auto* study = app.add_subcommand("study", "Vanishing-discount study with artifacts");
    add_problem(study);
    study->add_option("--schedule", o.schedule, "Decreasing lambda list")->delimiter(',');
    study->add_option("--z", o.z, "Reference node (default center)");
    study->add_option("--seed", o.seed, "Membership sampling seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Ok : ValidationFailure;
    }

    CLI::App* sc = app.get_subcommands().front();
    try {
        if (o.catalog.empty() && o.config.empty()) throw ConfigError("one of --catalog or --config is required");
        if (sc == validate) return cmd_validate(o, out);
        if (sc == solve) return cmd_solve(o, out);
        if (sc == ergodic) return cmd_ergodic(o, out);
        if (sc == measures) return cmd_measures(o, out);
        return cmd_study(o, out);
    } catch (const RouteDisagreement& e) {
        err << "error: " << e.what() << '\n';
        return RouteFailure;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return ValidationFailure;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return ValidationFailure;
    } catch (const MonotonicityError& e) {
        err << "scheme error: " << e.what() << '\n';
        return ValidationFailure;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << '\n';
        return SolverFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return SolverFailure;
    }
}

}  // namespace hjbvd::cli
