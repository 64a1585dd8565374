#include "support.hpp"

using namespace hjbvd;
using Catch::Matchers::WithinAbs;

TEST_CASE("catalog instances pass validation") {
    const auto cat = catalog();
    REQUIRE(cat.size() == 14);
    for (const auto& spec : cat) {
        INFO(spec.name);
        const auto rep = validate_spec(spec);
        CHECK(rep.ok());
    }
}

TEST_CASE("eikonal Hamiltonian equals |p| + m") {
    // b = -a, L = -m over a in [-1, 1]: sup_a (a p + m) = |p| + m, attained at a = sign(p).
    for (double m : {-1.0, 0.0, 1.0}) {
        const auto spec = eikonal_1d(m, BoundaryKind::StateConstraint);
        for (double p : {-2.5, -1.0, -0.3, 0.0, 0.7, 4.0}) {
            Vector x(1), pv(1);
            x << 0.2;
            pv << p;
            CHECK_THAT(bellman_f(spec, x, pv, Matrix::Zero(1, 1)), WithinAbs(std::abs(p) + m, 1e-14));
        }
    }
}

TEST_CASE("viscous Hamiltonian matches the closed form on sampled slopes") {
    // sup_q (-q p - q^2/2) = p^2/2 at q = -p, a control sample whenever p is a multiple of 0.1.
    ViscousQuadraticParams prm;
    const auto spec = viscous_quadratic_1d(BoundaryKind::Neumann, prm);
    for (double p : {-1.5, -0.5, 0.0, 0.3, 1.2}) {
        for (double xv : {-1.0, -0.25, 0.6}) {
            Vector x(1), pv(1);
            x << xv;
            pv << p;
            Matrix X(1, 1);
            X << 0.8;
            const double expect = -prm.epsilon * 0.8 + 0.5 * p * p + prm.amplitude * std::cos(std::numbers::pi * xv);
            CHECK_THAT(bellman_f(spec, x, pv, X), WithinAbs(expect, 1e-12));
        }
    }
}

TEST_CASE("bellman_f agrees with a brute-force sweep over controls") {
    const auto spec = eikonal_2d(0.5, BoundaryKind::Neumann, 12);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
        Vector x(2), p(2);
        x << U(rng) / 2, U(rng) / 2;
        p << U(rng), U(rng);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : spec.controls.samples) {
            const Vector b = spec.coeffs.drift(x, a);
            best = std::max(best, -b.dot(p) - spec.coeffs.cost(x, a));
        }
        std::size_t arg = 99;
        CHECK(bellman_f(spec, x, p, Matrix::Zero(2, 2), &arg) == best);
        CHECK(arg < spec.controls.size());
    }
}

TEST_CASE("negative diffusion fails the PSD check") {
    auto spec = eikonal_1d(0.0, BoundaryKind::StateConstraint, 3);
    spec.coeffs.diffusion = [](const Vector&, const Vector&) { return Matrix::Constant(1, 1, -0.1); };
    const auto rep = validate_spec(spec);
    CHECK_FALSE(rep.ok());
    const auto* c = rep.find("psd_diffusion");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->passed);
    CHECK_THAT(c->worst_value, WithinAbs(-0.1, 1e-12));
}

TEST_CASE("inward oblique direction fails validation") {
    auto spec = eikonal_1d(0.0, BoundaryKind::Neumann, 3);
    spec.bc = BoundaryCondition::neumann(BoundaryCondition::constant(0.0),
                                         [](const Vector&, const Vector& n) { return Vector(-n); });
    const auto rep = validate_spec(spec);
    const auto* c = rep.find("oblique_direction");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->passed);
    CHECK_FALSE(rep.ok());
}

TEST_CASE("shift_cost adds a constant to the running cost") {
    const auto base = viscous_quadratic_1d(BoundaryKind::StateConstraint);
    const auto shifted = shift_cost(base, 2.5);
    Vector x(1), a(1);
    x << 0.3;
    a << -0.7;
    CHECK_THAT(shifted.coeffs.cost(x, a) - base.coeffs.cost(x, a), WithinAbs(2.5, 1e-15));
}

TEST_CASE("boundary kind names round-trip") {
    for (auto k : {BoundaryKind::StateConstraint, BoundaryKind::Dirichlet, BoundaryKind::Neumann}) {
        CHECK(parse_boundary_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_boundary_kind("robin"), ConfigError);
}

TEST_CASE("uniform control samples are symmetric and include the origin") {
    const auto cs = uniform_controls_1d(2.0, 41);
    REQUIRE(cs.size() == 41);
    CHECK(cs.samples.front()[0] == -2.0);
    CHECK(cs.samples.back()[0] == 2.0);
    CHECK(std::abs(cs.samples[20][0]) < 1e-15);
}
