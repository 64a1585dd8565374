#include "support.hpp"

using namespace hjbvd;
using Catch::Matchers::WithinAbs;

namespace {

/// min c.x s.t. A x = b, x >= 0 from dense rows.
StandardLp dense_lp(const std::vector<std::vector<double>>& A, std::vector<double> b, std::vector<double> c) {
    StandardLp lp;
    lp.rows = A.size();
    lp.cols.resize(c.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (A[i][j] != 0.0) lp.cols[j].entries.push_back({i, A[i][j]});
        }
    }
    lp.rhs = std::move(b);
    lp.cost = std::move(c);
    return lp;
}

/// Brute-force optimum over all bases of a small standard-form LP.
double enumerate_vertices(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                          const std::vector<double>& c) {
    const std::size_t m = A.size(), n = c.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> pick(m);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t from) {
        if (k == m) {
            Matrix B(m, m);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) B(i, j) = A[i][pick[j]];
            }
            Eigen::FullPivLU<Matrix> lu(B);
            if (lu.rank() < static_cast<Eigen::Index>(m)) return;
            Vector bv(m);
            for (std::size_t i = 0; i < m; ++i) bv[i] = b[i];
            const Vector xb = lu.solve(bv);
            if (xb.minCoeff() < -1e-12) return;
            double obj = 0.0;
            for (std::size_t j = 0; j < m; ++j) obj += c[pick[j]] * xb[j];
            best = std::min(best, obj);
            return;
        }
        for (std::size_t j = from; j < n; ++j) {
            pick[k] = j;
            rec(k + 1, j + 1);
        }
    };
    rec(0, 0);
    return best;
}

}  // namespace

TEST_CASE("small LP with a hand-computed optimum") {
    // min -x - 2y s.t. x + y + s1 = 4, x + 3y + s2 = 6: optimum at (3, 1), value -5.
    const auto lp = dense_lp({{1, 1, 1, 0}, {1, 3, 0, 1}}, {4, 6}, {-1, -2, 0, 0});
    const auto r = solve_standard_form(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK_THAT(r.objective, WithinAbs(-5.0, 1e-12));
    CHECK_THAT(r.x[0], WithinAbs(3.0, 1e-12));
    CHECK_THAT(r.x[1], WithinAbs(1.0, 1e-12));
    // Dual feasibility c - A^T y >= 0 and strong duality b.y = c.x.
    CHECK_THAT(4 * r.duals[0] + 6 * r.duals[1], WithinAbs(-5.0, 1e-12));
    CHECK(-1 - (r.duals[0] + r.duals[1]) >= -1e-12);
    CHECK(-2 - (r.duals[0] + 3 * r.duals[1]) >= -1e-12);
}

TEST_CASE("infeasible and unbounded LPs are classified") {
    // x + y = -1 with x, y >= 0.
    CHECK(solve_standard_form(dense_lp({{1, 1}}, {-1}, {1, 1})).status == LpStatus::Infeasible);
    // min -x s.t. x - y = 1.
    CHECK(solve_standard_form(dense_lp({{1, -1}}, {1}, {-1, 0})).status == LpStatus::Unbounded);
}

TEST_CASE("Beale's cycling example terminates at the optimum") {
    // Classic degenerate instance on which Dantzig's rule without safeguards cycles.
    const std::vector<std::vector<double>> A{{0.25, -60, -0.04, 9, 1, 0, 0},
                                             {0.5, -90, -0.02, 3, 0, 1, 0},
                                             {0, 0, 1, 0, 0, 0, 1}};
    const std::vector<double> b{0, 0, 1};
    const std::vector<double> c{-0.75, 150, -0.02, 6, 0, 0, 0};
    const auto r = solve_standard_form(dense_lp(A, b, c));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK_THAT(r.objective, WithinAbs(-0.05, 1e-12));
}

TEST_CASE("random small LPs match vertex enumeration") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.1, 1.0);
    int solved = 0;
    for (int k = 0; k < 60; ++k) {
        const std::size_t m = 3, n = 7;
        std::vector<std::vector<double>> A(m, std::vector<double>(n));
        for (auto& row : A) {
            for (double& a : row) a = U(rng);
        }
        // A feasible point x0 > 0 and a cost bounded below on the feasible set.
        std::vector<double> x0(n), b(m, 0.0), c(n);
        for (double& x : x0) x = P(rng);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) b[i] += A[i][j] * x0[j];
        }
        for (double& v : c) v = P(rng) + (k % 3 == 0 ? 0.0 : U(rng));
        const auto r = solve_standard_form(dense_lp(A, b, c));
        if (r.status == LpStatus::Unbounded) continue;
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK_THAT(r.objective, WithinAbs(enumerate_vertices(A, b, c), 1e-9));
        CHECK(r.primal_residual <= 1e-9);
        ++solved;
    }
    CHECK(solved >= 30);
}

TEST_CASE("inequality LP finds a bounded maximum") {
    // max x + y s.t. x <= 2, y <= 3, x + 2y <= 7.
    InequalityLp lp;
    lp.vars = 2;
    lp.objective = {1.0, 1.0};
    lp.rows = {{{0, 1.0}}, {{1, 1.0}}, {{0, 1.0}, {1, 2.0}}};
    lp.rhs = {2.0, 3.0, 7.0};
    const auto r = maximize_inequality_form(lp, {0.0, 0.0});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK_THAT(r.objective, WithinAbs(4.5, 1e-12));
    CHECK_THAT(r.x[0], WithinAbs(2.0, 1e-12));
    CHECK_THAT(r.x[1], WithinAbs(2.5, 1e-12));
    CHECK(r.max_violation <= 1e-12);
}

TEST_CASE("inequality LP with a lineality direction") {
    // max d s.t. d + x0 - x1 <= 1, d - x0 + x1 <= 1: x0 - x1 is free along x0 = x1.
    InequalityLp lp;
    lp.vars = 3;
    lp.objective = {0.0, 0.0, 1.0};
    lp.rows = {{{2, 1.0}, {0, 1.0}, {1, -1.0}}, {{2, 1.0}, {0, -1.0}, {1, 1.0}}};
    lp.rhs = {1.0, 1.0};
    lp.pinned = {0};
    const auto r = maximize_inequality_form(lp, {0.0, 0.0, -5.0});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK_THAT(r.objective, WithinAbs(1.0, 1e-12));
    CHECK(r.x[0] == 0.0);
}

TEST_CASE("unbounded inequality LP is reported") {
    InequalityLp lp;
    lp.vars = 2;
    lp.objective = {1.0, 0.0};
    lp.rows = {{{1, 1.0}}};
    lp.rhs = {1.0};
    CHECK(maximize_inequality_form(lp, {0.0, 0.0}).status == LpStatus::Unbounded);
}

TEST_CASE("oversized dense problems are refused") {
    LpOptions opt;
    opt.max_dense_dim = 2;
    InequalityLp lp;
    lp.vars = 3;
    lp.objective = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(maximize_inequality_form(lp, {0.0, 0.0, 0.0}, opt), SolverError);
}
