#include "support.hpp"

using namespace hjbvd;
using Catch::Matchers::WithinAbs;
using test::build;

namespace {

const std::vector<double> kSchedule{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};

}  // namespace

TEST_CASE("Dirichlet eikonal with m = 1 sits in the constraint regime") {
    const auto op = build(eikonal_1d(1.0, BoundaryKind::Dirichlet), 401);
    const auto r = critical_value_vanishing_discount(op, kSchedule);
    CHECK_THAT(r.c, WithinAbs(1.0, 2e-2));
    CHECK(r.dichotomy == Dichotomy::ConstraintRegime);
}

TEST_CASE("Dirichlet eikonal with m = -1 has c = 0 and the distance limit") {
    const auto op = build(eikonal_1d(-1.0, BoundaryKind::Dirichlet), 401);
    const auto r = critical_value_vanishing_discount(op, kSchedule);
    CHECK_THAT(r.c, WithinAbs(0.0, 2e-2));
    CHECK(r.dichotomy == Dichotomy::InteriorRegime);
    // v^lambda -> 1 - |x| as lambda -> 0 with c = 0.
    double err = 0.0;
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        err = std::max(err, std::abs(r.corrector[i] - (1.0 - std::abs(op.grid.point(i)[0]))));
    }
    CHECK(err <= 5e-2);
}

TEST_CASE("Neumann eikonal critical value equals m") {
    for (double m : {-1.0, 0.0, 1.0}) {
        INFO("m = " << m);
        const auto op = build(eikonal_1d(m, BoundaryKind::Neumann), 401);
        CHECK_THAT(critical_value_vanishing_discount(op, kSchedule).c, WithinAbs(m, 2e-2));
        CHECK_THAT(critical_value_subsolution_lp(op).c, WithinAbs(m, 1e-9));
    }
}

TEST_CASE("constant cost: every route gives -ell") {
    for (auto kind : {BoundaryKind::StateConstraint, BoundaryKind::Neumann}) {
        const auto op = build(constant_cost(3.0, kind), 101);
        for (double lambda : {1.0, 0.1}) {
            const auto v = solve_discounted(op, lambda);
            for (double x : v.values) CHECK(std::abs(lambda * x - 3.0) <= 4.0 * std::numeric_limits<double>::epsilon() * 3.0);
        }
        const auto rc = critical_value_all_routes(op, kSchedule);
        CHECK_THAT(rc.vanishing.c, WithinAbs(-3.0, 1e-9));
        CHECK_THAT(rc.subsolution.c, WithinAbs(-3.0, 1e-9));
        CHECK_THAT(rc.measure.c, WithinAbs(-3.0, 1e-9));
        CHECK(rc.agree(op.grid.h_max()));
    }
}

TEST_CASE("routes agree on the catalog") {
    for (const auto& spec : catalog()) {
        INFO(spec.name);
        const auto op = build(spec, 201);
        const auto rc = critical_value_all_routes(op, kSchedule);
        CHECK(rc.subsolution_vs_measure <= 1e-6);
        CHECK(rc.vanishing_vs_subsolution <= 5e-2);
        CHECK(rc.dichotomy_consistent);
        CHECK(rc.subsolution.residuals.at("max_violation") <= 1e-8);
    }
}

TEST_CASE("cost shift moves critical values and keeps normalized limits") {
    const double s = 0.75;
    for (const auto& spec : catalog()) {
        if (spec.bc.kind == BoundaryKind::Dirichlet) continue;
        INFO(spec.name);
        const auto op = build(spec, 101);
        const auto shifted = op.with_cost_shift(s);
        const auto a = critical_value_all_routes(op, kSchedule);
        const auto b = critical_value_all_routes(shifted, kSchedule);
        CHECK_THAT(b.vanishing.c - a.vanishing.c, WithinAbs(-s, 1e-9));
        CHECK_THAT(b.subsolution.c - a.subsolution.c, WithinAbs(-s, 1e-9));
        CHECK_THAT(b.measure.c - a.measure.c, WithinAbs(-s, 1e-9));
        CHECK(test::sup_norm_diff(a.vanishing.corrector.values, b.vanishing.corrector.values) <= 1e-9);
    }
}

TEST_CASE("Richardson extrapolation is exact on quadratics") {
    const std::vector<double> lam{0.4, 0.2, 0.1};
    std::vector<double> y;
    for (double l : lam) y.push_back(1.5 - 2.0 * l + 7.0 * l * l);
    CHECK_THAT(richardson_zero(lam, y), WithinAbs(1.5, 1e-13));
    CHECK_THROWS_AS(richardson_zero({0.1, 0.01}, {1.0, 1.0}), DomainError);
}

TEST_CASE("schedules must be positive, decreasing and long enough") {
    CHECK_THROWS_AS(check_schedule({0.1, 0.01}), DomainError);
    CHECK_THROWS_AS(check_schedule({0.1, 0.2, 0.01}), DomainError);
    CHECK_THROWS_AS(check_schedule({0.1, 0.01, 0.0}), DomainError);
    CHECK_NOTHROW(check_schedule(kSchedule));
}

TEST_CASE("classification only applies to Dirichlet") {
    const auto sc = build(eikonal_1d(1.0, BoundaryKind::StateConstraint), 21);
    CHECK(classify(sc, 1.0) == Dichotomy::NotApplicable);
    const auto d = build(eikonal_1d(1.0, BoundaryKind::Dirichlet), 201);
    CHECK(classify(d, 1.0) == Dichotomy::ConstraintRegime);
    CHECK(classify(d, 0.0) == Dichotomy::InteriorRegime);
}

TEST_CASE("vanishing-discount corrector nearly solves the ergodic problem") {
    for (const auto& spec : catalog()) {
        INFO(spec.name);
        const auto op = build(spec, 201);
        const auto r = critical_value_vanishing_discount(op, kSchedule);
        CHECK(r.corrector.residual <= defaults::selection_tol(op.grid.h_max(), kSchedule.back()));
    }
}

TEST_CASE("parallel schedule solves match the sequential ones") {
    const auto op = build(viscous_quadratic_1d(BoundaryKind::Neumann), 201);
    const auto seq = solve_schedule(op, kSchedule, 1);
    const auto par = solve_schedule(op, kSchedule, 3);
    for (std::size_t k = 0; k < kSchedule.size(); ++k) {
        CHECK(test::sup_norm_diff(seq[k].values, par[k].values) <= 1e-9 / kSchedule[k]);
    }
}
