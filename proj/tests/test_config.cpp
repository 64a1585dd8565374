#include "support.hpp"

using namespace hjbvd;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(HJBVD_SOURCE_DIR) / "configs";

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "t.toml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("config eikonal matches the built-in instance") {
    const auto spec = load_config(kConfigs / "eikonal_dirichlet.toml");
    CHECK(spec.name == "eikonal_dirichlet");
    CHECK(spec.bc.kind == BoundaryKind::Dirichlet);
    const auto a = test::build(spec, 41);
    const auto b = test::build(eikonal_1d(1.0, BoundaryKind::Dirichlet, 3), 41);
    REQUIRE(a.entries.size() == b.entries.size());
    CHECK(a.cost == b.cost);
    CHECK(a.row_start == b.row_start);
    for (std::size_t k = 0; k < a.entries.size(); ++k) {
        CHECK(a.entries[k].col == b.entries[k].col);
        CHECK(a.entries[k].w == b.entries[k].w);
    }
}

TEST_CASE("tabulated cost interpolates linearly between table nodes") {
    const auto spec = load_config(kConfigs / "viscous_tabulated.toml");
    CHECK(spec.bc.kind == BoundaryKind::Neumann);
    REQUIRE(spec.controls.size() == 5);
    const auto& q = spec.controls.samples;
    auto cost_at = [&](double x, std::size_t a) {
        Vector xv(1);
        xv << x;
        return spec.coeffs.cost(xv, q[a]);
    };
    // Table rows are 0.5 q^2 + 0.5 cos(pi x) at x = -1, -0.5, 0, 0.5, 1.
    CHECK_THAT(cost_at(0.0, 2), WithinAbs(0.5, 1e-12));
    CHECK_THAT(cost_at(-1.0, 0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(cost_at(0.25, 4), WithinAbs(0.5 * (1.0 + 0.5), 1e-12));
    Vector x(1);
    x << 0.3;
    CHECK_THAT(spec.coeffs.diffusion(x, q[1])(0, 0), WithinAbs(0.05, 1e-15));
    CHECK_THAT(spec.coeffs.drift(x, q[1])[0], WithinAbs(-0.5, 1e-15));
    CHECK(validate_spec(spec).ok());
}

TEST_CASE("planar config builds a Neumann square") {
    const auto spec = load_config(kConfigs / "eikonal_square_neumann.toml");
    CHECK(spec.dim() == 2);
    CHECK(spec.controls.size() == 5);
    const auto op = test::build(spec, 11);
    CHECK(check_monotonicity(op).passed);
    CHECK_THAT(critical_value_subsolution_lp(op).c, WithinAbs(1.0, 1e-9));
}

TEST_CASE("negative diffusion config parses and then fails validation") {
    const auto spec = load_config(kConfigs / "bad.toml");
    const auto rep = validate_spec(spec);
    CHECK_FALSE(rep.ok());
    CHECK_FALSE(rep.find("psd_diffusion")->passed);
}

TEST_CASE("config diagnostics name the source line and field") {
    SECTION("syntax error") {
        const auto msg = error_of("[domain]\nlo = -1.0\nhi = = 1\n");
        CHECK_THAT(msg, ContainsSubstring("t.toml:3"));
    }
    SECTION("missing section") {
        CHECK_THAT(error_of("name = \"x\"\n"), ContainsSubstring("[domain]"));
    }
    SECTION("per-control array of the wrong length") {
        const auto msg = error_of(R"([domain]
lo = -1.0
hi = 1.0
[controls]
kind = "uniform"
count = 3
[coefficients]
drift = [1.0, 0.0]
cost = 0.0
[boundary]
kind = "neumann"
)");
        CHECK_THAT(msg, ContainsSubstring("t.toml:8"));
        CHECK_THAT(msg, ContainsSubstring("coefficients.drift"));
    }
    SECTION("unknown control kind") {
        const auto msg = error_of("[domain]\nlo = 0.0\nhi = 1.0\n[controls]\nkind = \"sphere\"\n");
        CHECK_THAT(msg, ContainsSubstring("controls.kind"));
        CHECK_THAT(msg, ContainsSubstring("sphere"));
    }
    SECTION("missing cost") {
        const auto msg = error_of("[domain]\nlo = 0.0\nhi = 1.0\n[controls]\ncount = 3\n[coefficients]\ndrift = 1.0\n");
        CHECK_THAT(msg, ContainsSubstring("coefficients.cost"));
    }
    SECTION("unreadable table file") {
        const auto msg = error_of(R"([domain]
lo = 0.0
hi = 1.0
[controls]
count = 3
[coefficients]
nodes = 4
cost = "no_such_table.csv"
[boundary]
kind = "state_constraint"
)");
        CHECK_THAT(msg, ContainsSubstring("cannot read"));
    }
    SECTION("unknown boundary kind") {
        const auto msg = error_of("[domain]\nlo = 0.0\nhi = 1.0\n[controls]\ncount = 3\n[coefficients]\ncost = 0.0\n"
                                  "[boundary]\nkind = \"robin\"\n");
        CHECK_THAT(msg, ContainsSubstring("robin"));
    }
}
