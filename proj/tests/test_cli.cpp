#include "support.hpp"

#include <cstdlib>
#include <initializer_list>

#include "hjbvd/cli.hpp"

using namespace hjbvd;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(HJBVD_SOURCE_DIR) / "configs";

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(std::initializer_list<std::string> args) {
    std::vector<std::string> store{"hjbvd"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : store) argv.push_back(s.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace

TEST_CASE("validate rejects negative diffusion with exit code 1") {
    const auto r = run({"validate", "--config", (kConfigs / "bad.toml").string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.out + r.err, ContainsSubstring("psd_diffusion"));
}

TEST_CASE("validate accepts the sample configs") {
    for (const char* f : {"eikonal_dirichlet.toml", "viscous_tabulated.toml", "eikonal_square_neumann.toml"}) {
        INFO(f);
        CHECK(run({"validate", "--config", (kConfigs / f).string()}).code == 0);
    }
    CHECK(run({"validate", "--catalog", "viscous_quadratic_1d", "--bc", "neumann"}).code == 0);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run({"solve", "--catalog", "no_such_problem"}).code == 1);
    CHECK(run({"solve", "--catalog", "eikonal_1d", "--lambda", "-1"}).code == 1);
    CHECK(run({"ergodic", "--catalog", "eikonal_1d", "--schedule", "0.1,0.2,0.01"}).code == 1);
    CHECK(run({"solve"}).code == 1);
    CHECK(run({"solve", "--catalog", "eikonal_1d", "--shape", "2"}).code == 1);
}

TEST_CASE("solve writes the field CSV") {
    const auto dir = test::scratch_dir("cli_solve");
    const auto r = run({"solve", "--catalog", "eikonal_1d", "--m", "1", "--bc", "dirichlet", "--lambda", "0.1",
                        "--shape", "401", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto csv = test::slurp(dir / "solution_lambda_0.1.csv");
    CHECK(csv.rfind("x,value\n-1,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 402);
}

TEST_CASE("ergodic reports all routes") {
    const auto dir = test::scratch_dir("cli_ergodic");
    const auto r = run({"ergodic", "--catalog", "eikonal_1d", "--m", "1", "--bc", "dirichlet", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(test::slurp(dir / "ergodic.json"));
    CHECK(std::abs(j["vanishing_discount"]["c"].get<double>() - 1.0) <= 2e-2);
    CHECK(j["vanishing_discount"]["dichotomy"] == "ConstraintRegime");
    CHECK(std::filesystem::exists(dir / "corrector.csv"));
}

TEST_CASE("measures writes node,control,weight tables") {
    const auto dir = test::scratch_dir("cli_measures");
    const auto r = run({"measures", "--catalog", "viscous_quadratic_1d", "--bc", "neumann", "--shape", "51", "--lambda",
                        "0.1", "--out", dir.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"green_measure.csv", "mather_measure.csv"}) {
        CHECK(test::slurp(dir / f).rfind("node,control,weight\n", 0) == 0);
    }
}

TEST_CASE("route disagreement exits with code 3 and keeps the comparison report") {
    const auto dir = test::scratch_dir("cli_disagree");
    // A schedule of large discounts extrapolates far from the LP value.
    const auto r = run({"study", "--catalog", "viscous_quadratic_1d", "--bc", "state_constraint", "--shape", "401",
                        "--schedule", "50,20,10", "--out", dir.string()});
    CHECK(r.code == 3);
    const auto j = nlohmann::json::parse(test::slurp(dir / "report.json"));
    CHECK(j["routes_agree"] == false);
}

TEST_CASE("study artifacts are byte-identical and record the seed") {
    const auto a = test::scratch_dir("cli_study_a");
    const auto b = test::scratch_dir("cli_study_b");
    const auto ra = run({"study", "--catalog", "eikonal_1d", "--m", "-1", "--bc", "dirichlet", "--shape", "101",
                         "--seed", "42", "--out", a.string()});
    const auto rb = run({"study", "--catalog", "eikonal_1d", "--m", "-1", "--bc", "dirichlet", "--shape", "101",
                         "--seed", "42", "--jobs", "2", "--out", b.string()});
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(a)) {
        INFO(e.path().filename());
        CHECK(test::slurp(e.path()) == test::slurp(b / e.path().filename()));
        ++files;
    }
    CHECK(files >= 9);
    const auto j = nlohmann::json::parse(test::slurp(a / "report.json"));
    CHECK(j["seed"] == 42);
}

TEST_CASE("output directory defaults to the environment variable") {
    const auto dir = test::scratch_dir("cli_env");
    ::setenv("HJBVD_OUTPUT_DIR", dir.string().c_str(), 1);
    const auto r = run({"solve", "--catalog", "constant_cost", "--ell", "2", "--shape", "11", "--format", "json"});
    ::unsetenv("HJBVD_OUTPUT_DIR");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(test::slurp(dir / "solution_lambda_0.1.json"));
    CHECK(j["values"].size() == 11);
}
