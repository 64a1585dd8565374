#include "support.hpp"

using namespace hjbvd;
using Catch::Matchers::WithinAbs;

namespace {

StudyConfig quick_config(std::size_t shape = 101) {
    StudyConfig cfg;
    cfg.shapes = {shape};
    return cfg;
}

std::vector<ValueFunction> family(const Grid& g, const std::vector<double>& lambdas,
                                  const std::function<double(double x, double lambda)>& f) {
    std::vector<ValueFunction> out;
    for (double l : lambdas) {
        ValueFunction v;
        v.grid = g;
        v.lambda = l;
        for (std::size_t i = 0; i < g.size(); ++i) v.values.push_back(f(g.point(i)[0], l));
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

TEST_CASE("equicontinuity probe flags an oscillating family") {
    const Grid g(interval(-1.0, 1.0), {401});
    const std::vector<double> lambdas{1e-1, 3e-2, 1e-2};
    const auto bad = equicontinuity_probe(family(g, lambdas, [](double x, double l) { return std::sin(x / l); }));
    CHECK(bad.flagged);
    CHECK(bad.growth > 2.0);
    const auto good = equicontinuity_probe(family(g, lambdas, [](double x, double l) { return 1.0 - std::abs(x) + l * x; }));
    CHECK_FALSE(good.flagged);
}

TEST_CASE("study of the Dirichlet eikonal with m = -1") {
    const auto dir = test::scratch_dir("study_dirichlet");
    auto cfg = quick_config();
    cfg.outputs = dir;
    const auto r = run_study(eikonal_1d(-1.0, BoundaryKind::Dirichlet), cfg);
    CHECK(r.table.converged);
    CHECK(r.table.deltas_monotone);
    CHECK(r.uniqueness.applicable);
    CHECK(r.uniqueness.ok());
    CHECK(r.selection.ok());
    CHECK(r.membership.ok());
    CHECK_FALSE(r.equicontinuity.flagged);
    CHECK(r.warnings.empty());
    CHECK_THAT(r.table.c_used, WithinAbs(0.0, 1e-9));
    CHECK(r.dichotomy == Dichotomy::InteriorRegime);
    // Limit is the distance to the boundary up to O(h).
    double err = 0.0;
    for (std::size_t i = 0; i < r.table.limit_estimate.size(); ++i) {
        err = std::max(err, std::abs(r.table.limit_estimate[i] - (1.0 - std::abs(r.table.limit_estimate.grid.point(i)[0]))));
    }
    CHECK(err <= 5e-2);

    for (const char* f : {"table.csv", "limit.csv", "mather_measure.csv", "report.json", "profile_0.1.dat",
                          "profile_0.001.dat"}) {
        INFO(f);
        CHECK(std::filesystem::exists(dir / f));
    }
    const auto report = nlohmann::json::parse(test::slurp(dir / "report.json"));
    CHECK(report["seed"] == defaults::seed);
    CHECK(report["routes_agree"] == true);
    CHECK(report["table"]["converged"] == true);
    CHECK(test::slurp(dir / "limit.csv").rfind("x,value\n", 0) == 0);
    CHECK(test::slurp(dir / "mather_measure.csv").rfind("node,control,weight\n", 0) == 0);
}

TEST_CASE("study artifacts are byte-identical across runs") {
    const auto a = test::scratch_dir("study_det_a");
    const auto b = test::scratch_dir("study_det_b");
    auto cfg = quick_config();
    cfg.outputs = a;
    const auto ra = run_study(viscous_quadratic_1d(BoundaryKind::Neumann), cfg);
    cfg.outputs = b;
    cfg.jobs = 3;
    const auto rb = run_study(viscous_quadratic_1d(BoundaryKind::Neumann), cfg);
    REQUIRE(ra.artifacts.size() == rb.artifacts.size());
    for (const auto& p : ra.artifacts) {
        INFO(p.filename());
        CHECK(test::slurp(p) == test::slurp(b / p.filename()));
    }
}

TEST_CASE("refinement grid reproduces the limit at shared nodes") {
    auto cfg = quick_config();
    cfg.shapes = {101, 201};
    const auto r = run_study(eikonal_1d(-1.0, BoundaryKind::Neumann), cfg);
    REQUIRE(r.refinement.size() == 1);
    REQUIRE(r.refinement_limit_diff.size() == 1);
    CHECK(r.refinement_limit_diff[0] <= 5.0 * r.table.h);
}

TEST_CASE("selection inequality holds on every catalog study") {
    for (const auto& spec : catalog()) {
        INFO(spec.name);
        const auto r = run_study(spec, quick_config(201));
        const double tol = defaults::selection_tol(r.table.h, 1e-3);
        CHECK(r.selection.mather_pairing <= tol);
        CHECK(std::abs(r.selection.reference_pairing) <= tol);
        CHECK(r.table.converged);
        CHECK(r.table.limit_estimate.residual <= tol);
        CHECK(r.warnings.empty());
    }
}

TEST_CASE("an increasing delta produces a warning") {
    // Normalized iterates that drift apart as lambda decreases.
    const auto op = test::build(eikonal_1d(0.0, BoundaryKind::Neumann), 51);
    const auto sols = family(op.grid, {1e-1, 1e-2, 1e-3}, [](double x, double l) { return x / std::sqrt(l); });
    const auto t = detail::convergence_table(op, sols, 0.0, Dichotomy::NotApplicable, op.grid.center_node());
    CHECK_FALSE(t.deltas_monotone);
    CHECK_FALSE(t.converged);
    CHECK(t.warnings.size() == 2);
}

TEST_CASE("study rejects a reference node off the grid") {
    auto cfg = quick_config(21);
    cfg.reference_node = 500;
    CHECK_THROWS_AS(run_study(constant_cost(1.0), cfg), ConfigError);
}
