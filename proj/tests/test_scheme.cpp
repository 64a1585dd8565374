#include "support.hpp"

using namespace hjbvd;
using Catch::Matchers::WithinAbs;
using test::build;

namespace {

double weight_to(const DiscreteOperator& op, std::size_t r, std::size_t col) {
    double w = 0.0;
    for (const auto& e : op.row(r)) {
        if (e.col == col) w += e.w;
    }
    return w;
}

TestFunction sine_1d() {
    return {[](const Vector& x) { return std::sin(x[0]); },
            [](const Vector& x) { return Vector::Constant(1, std::cos(x[0])).eval(); },
            [](const Vector& x) { return Matrix::Constant(1, 1, -std::sin(x[0])).eval(); }};
}

/// One explicit sweep T(u)_i = u_i - tau * residual_i with tau at the CFL bound.
std::vector<double> explicit_sweep(const DiscreteOperator& op, double lambda, const std::vector<double>& u, double tau) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - tau * bellman_value(op, lambda, u, i);
    return out;
}

}  // namespace

TEST_CASE("upwind stencil by hand for a leftward drift") {
    // Shape 5 on (-1, 1): h = 0.5. Control a = 1 gives b = -1, so the row
    // jumps to i - 1 at rate 1/h with running cost -m.
    const auto op = build(eikonal_1d(1.0, BoundaryKind::StateConstraint, 3), 5);
    REQUIRE(op.n_controls() == 3);
    REQUIRE(op.controls.samples[2][0] == 1.0);
    const std::size_t i = 2;
    const std::size_t r = op.row_index(i, 2);
    CHECK_THAT(weight_to(op, r, i - 1), WithinAbs(2.0, 1e-15));
    CHECK(weight_to(op, r, i + 1) == 0.0);
    CHECK(op.cost[r] == -1.0);
    // Rest control: no jumps.
    CHECK(op.row(op.row_index(i, 1)).empty());
}

TEST_CASE("state-constraint boundary rows only point inward") {
    const auto op = build(eikonal_1d(1.0, BoundaryKind::StateConstraint, 3), 5);
    CHECK(op.role[0] == NodeRole::Constraint);
    // Leftward control at the left end has no admissible stencil entry.
    CHECK(op.row(op.row_index(0, 2)).empty());
    CHECK_THAT(weight_to(op, op.row_index(0, 0), 1), WithinAbs(2.0, 1e-15));
}

TEST_CASE("zero coefficients give an empty stencil") {
    const auto op = build(constant_cost(2.0), 11);
    CHECK(op.entries.empty());
    for (double c : op.cost) CHECK(c == 2.0);
}

TEST_CASE("catalog builds are monotone and local") {
    for (const auto& spec : catalog()) {
        INFO(spec.name);
        for (std::size_t n : {5u, 101u}) {
            const auto op = build(spec, n);
            const auto rep = check_monotonicity(op);
            CHECK(rep.passed);
            CHECK(rep.min_weight >= 0.0);
            for (std::size_t i = 0; i < op.n_nodes(); ++i) {
                for (std::size_t a = 0; a < op.n_controls(); ++a) {
                    for (const auto& e : op.row(op.row_index(i, a))) {
                        REQUIRE(e.col < op.n_nodes());
                        CHECK(e.col != i);
                        CHECK(std::abs(static_cast<long>(e.col) - static_cast<long>(i)) <= 2);
                    }
                }
                for (const auto& e : op.boundary_row(i)) {
                    REQUIRE(e.col < op.n_nodes());
                    CHECK(std::abs(static_cast<long>(e.col) - static_cast<long>(i)) <= 2);
                }
            }
        }
    }
}

TEST_CASE("planar stencils stay within two cells per axis") {
    const auto op = build(eikonal_2d(1.0, BoundaryKind::Neumann, 8), 9);
    CHECK(check_monotonicity(op).passed);
    for (std::size_t r = 0; r + 1 < op.row_start.size(); ++r) {
        const auto mi = op.grid.multi(r / op.n_controls());
        for (const auto& e : op.row(r)) {
            const auto mj = op.grid.multi(e.col);
            CHECK(std::abs(static_cast<long>(mi[0]) - static_cast<long>(mj[0])) <= 2);
            CHECK(std::abs(static_cast<long>(mi[1]) - static_cast<long>(mj[1])) <= 2);
        }
    }
}

TEST_CASE("injected negative weight is reported at its entry") {
    auto op = build(eikonal_1d(0.0, BoundaryKind::StateConstraint, 3), 11);
    const std::size_t r = op.row_index(4, 0);
    REQUIRE(!op.row(r).empty());
    op.entries[op.row_start[r]].w = -0.5;
    const auto rep = check_monotonicity(op);
    CHECK_FALSE(rep.passed);
    CHECK(rep.min_weight == -0.5);
    CHECK(rep.node == 4);
    CHECK(rep.control == 0);
    CHECK_FALSE(rep.in_boundary_row);
}

TEST_CASE("rotated degenerate diffusion is rejected by the builder") {
    // a = R diag(1, 0) R^T with a 30 degree rotation: |a_xy| > min(a_xx, a_yy).
    ProblemSpec spec;
    spec.name = "rotated";
    spec.domain = rectangle(-1, 1, -1, 1);
    spec.controls = disk_controls(4);
    const double th = std::numbers::pi / 6.0;
    Matrix R(2, 2);
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 1.0;
    const Matrix A = R * D * R.transpose();
    spec.coeffs.diffusion = [A](const Vector&, const Vector&) { return A; };
    spec.coeffs.drift = [](const Vector&, const Vector&) { return Vector::Zero(2).eval(); };
    spec.coeffs.cost = [](const Vector&, const Vector&) { return 0.0; };
    spec.bc = BoundaryCondition::state_constraint();
    CHECK_THROWS_AS(build(spec, 11), MonotonicityError);
}

TEST_CASE("grids with fewer than three nodes are refused") {
    CHECK_THROWS_AS(build(eikonal_1d(0.0, BoundaryKind::Neumann), 2), DomainError);
}

TEST_CASE("consistency probe is exact on constants and on linear functions without diffusion") {
    const auto op = build(eikonal_1d(1.0, BoundaryKind::Dirichlet), 51);
    const TestFunction constant{[](const Vector&) { return 3.0; }, [](const Vector&) { return Vector::Zero(1).eval(); },
                                [](const Vector&) { return Matrix::Zero(1, 1).eval(); }};
    CHECK(consistency_probe(op, constant).max_error == 0.0);
    const TestFunction linear{[](const Vector& x) { return 2.0 * x[0] - 1.0; },
                              [](const Vector&) { return Vector::Constant(1, 2.0).eval(); },
                              [](const Vector&) { return Matrix::Zero(1, 1).eval(); }};
    CHECK(consistency_probe(op, linear).max_error <= 1e-12);
}

TEST_CASE("consistency error halves under mesh doubling") {
    SECTION("eikonal") {
        double prev = 0.0;
        for (std::size_t n : {51u, 101u, 201u}) {
            const double err = consistency_probe(build(eikonal_1d(1.0, BoundaryKind::Neumann), n), sine_1d()).max_error;
            if (prev > 0.0) {
                CHECK(prev / err >= 2.0 / 1.5);
                CHECK(prev / err <= 2.0 * 1.5);
            }
            prev = err;
        }
    }
    SECTION("viscous, eps = 0.01, shape 51 is O(h)") {
        ViscousQuadraticParams prm;
        prm.epsilon = 0.01;
        const auto op = build(viscous_quadratic_1d(BoundaryKind::StateConstraint, prm), 51);
        CHECK(check_monotonicity(op).passed);
        // Upwinding of |b| <= 2 costs at most |b| h |u''| / 2 <= h, diffusion adds O(h^2).
        CHECK(consistency_probe(op, sine_1d()).max_error <= 1.1 * op.grid.h_max());
    }
}

TEST_CASE("explicit sweep is order-preserving below the CFL bound") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 1.0);
    const double lambda = 0.1;
    std::size_t violations = 0;
    for (const auto& spec : catalog()) {
        const auto op = build(spec, 41);
        const double tau = 1.0 / (lambda + op.max_rate());
        for (int k = 0; k < 10; ++k) {
            std::vector<double> u(op.n_nodes()), v(op.n_nodes());
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] = 5.0 * U(rng);
                v[i] = u[i] + P(rng) * (k % 2 == 0 ? 1.0 : 1e-6);
            }
            const auto tu = explicit_sweep(op, lambda, u, tau);
            const auto tv = explicit_sweep(op, lambda, v, tau);
            for (std::size_t i = 0; i < u.size(); ++i) {
                if (!op.has_bellman(i)) continue;
                if (tu[i] > tv[i] + 1e-12) ++violations;
            }
        }
    }
    CHECK(violations == 0);
}
