#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "herdsim/h_herds.hpp"
#include "herdsim/harness.hpp"
#include "herdsim/tree_algebra.hpp"
#include "herdsim/validation.hpp"

using namespace herdsim;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config resolution layers defaults, file and flags") {
    const auto c = resolve_config("pf", json{{"lambda", 2.0}, {"h", 2}}, json{{"lambda", 0.5}});
    CHECK(c.at("lambda") == 0.5);
    CHECK(c.at("h") == 2);
    CHECK(c.at("v") == 1.0);
    CHECK_THROWS_AS(resolve_config("pf", json{{"zzz", 1}}, json()), ConfigError);
    CHECK_THROWS_AS(resolve_config("pf", json(), json{{"lambda", "fast"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("pf", json(), json{{"lambda", -1.0}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("pf", json(), json{{"d", 2}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("pf", json::array(), json()), ConfigError);
    CHECK_THROWS_AS(resolve_config("simulate-cp", json(), json{{"n", 101}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("extinction-scan", json(), json{{"n_grid", json::array()}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("validate", json(), json{{"criteria", {13}}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("nonsense", json(), json()), ConfigError);
    // Null defaults accept numbers.
    CHECK(resolve_config("embedded", json(), json{{"eps1", 0.2}}).at("eps1") == 0.2);
    for (auto& name : command_names()) CHECK_NOTHROW(resolve_config(name, json(), json()));
}

TEST_CASE("config hash depends on every value") {
    const auto a = resolve_config("pf", json(), json());
    const auto b = resolve_config("pf", json(), json{{"v", 1.5}});
    CHECK(config_hash(a) == config_hash(resolve_config("pf", json(), json())));
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("pf and lambda-bar summaries") {
    std::ostringstream log;
    const auto pf = run_experiment("pf", resolve_config("pf", json(), json()), "", log);
    CHECK(pf.summary.at("dim") == 9);
    CHECK(pf.summary.at("provenance").at("command") == "pf");
    CHECK(pf.files.empty());
    const auto lb = run_experiment("lambda-bar", resolve_config("lambda-bar", json(), json()), "", log).summary;
    CHECK(lb.at("mu_lo").get<double>() < 0.0);
    CHECK(lb.at("mu_hi").get<double>() >= 0.0);
    CHECK(lb.at("hi").get<double>() - lb.at("lo").get<double>() <= 1e-3);
}

TEST_CASE("same config and seed give byte-identical artifacts") {
    const auto root = std::filesystem::temp_directory_path() / "herdsim_harness_test";
    std::filesystem::remove_all(root);
    std::ostringstream log;
    const json scan{{"n_grid", {20, 40}}, {"lambda_grid", {0.3}}, {"v_grid", {0.0, 1.0}}, {"reps", 6}, {"horizon", 200.0}};
    const json herds{{"reps", 40}, {"lambda", 0.8}};
    const json emb{{"n", 400}, {"reps", 2}, {"horizon", 1.0}, {"lambda", 1.0}, {"check_every", 200}};
    for (const char* run : {"a", "b"}) {
        run_experiment("extinction-scan", resolve_config("extinction-scan", json(), scan), (root / run / "scan").string(), log);
        run_experiment("simulate-herds", resolve_config("simulate-herds", json(), herds), (root / run / "herds").string(), log);
        run_experiment("embedded", resolve_config("embedded", json(), emb), (root / run / "emb").string(), log);
    }
    for (const char* sub : {"scan/runs.csv", "scan/summary.csv", "scan/summary.json", "herds/runs.csv", "emb/runs.csv",
                            "emb/monitors.json", "emb/summary.json"}) {
        const auto a = slurp(root / "a" / sub);
        CHECK_MESSAGE(!a.empty(), sub);
        CHECK_MESSAGE(a == slurp(root / "b" / sub), sub);
    }
    const auto summary = json::parse(slurp(root / "a" / "emb" / "summary.json"));
    CHECK(summary.at("integrity_violations") == 0);
    std::filesystem::remove_all(root);
}

TEST_CASE("exit codes by failure kind") {
    CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
    CHECK(exit_code_for(std::invalid_argument("x")) == kExitConfig);
    CHECK(exit_code_for(PFNonConvergence(10, 1.0)) == kExitNumerical);
    CHECK(exit_code_for(EnumerationOverflow("x", 5)) == kExitNumerical);
    CHECK(exit_code_for(BracketError("x")) == kExitNumerical);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitFailure);
    std::ostringstream log;
    try {
        run_experiment("pf", resolve_config("pf", json(), json{{"d", 5}, {"h", 3}}), "", log);
        FAIL("expected an enumeration overflow");
    } catch (const std::exception& e) {
        CHECK(exit_code_for(e) == kExitNumerical);
    }
}

TEST_CASE("spearman rank correlation") {
    const auto up = spearman({1, 2, 3, 4, 5, 6}, {2, 4, 5, 9, 10, 30});
    CHECK(up.rho == doctest::Approx(1.0));
    CHECK(up.p_greater == 0.0);
    const auto down = spearman({1, 2, 3, 4, 5, 6}, {6, 5, 4, 3, 2, 1});
    CHECK(down.rho == doctest::Approx(-1.0));
    CHECK(down.p_greater > 0.99);
    // Ties get average ranks: x ranks (1.5, 1.5, 3, 4), y ranks (1, 2, 3, 4).
    const auto tied = spearman({1, 1, 2, 3}, {1, 2, 3, 4});
    CHECK(tied.rho == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
    CHECK(std::isnan(spearman({1, 2, 3}, {7, 7, 7}).rho));
    CHECK_THROWS(spearman({1, 2}, {1}));
    // Reference values from scipy.stats.spearmanr(..., alternative="greater").
    std::vector<double> x, y;
    const int perm[12] = {3, 1, 2, 6, 4, 5, 12, 7, 8, 9, 11, 10};
    for (int i = 0; i < 12; ++i) {
        x.push_back(i + 1);
        y.push_back(perm[i]);
    }
    const auto s = spearman(x, y);
    CHECK(s.rho == doctest::Approx(0.8461538461538463));
    CHECK(s.p_greater == doctest::Approx(2.605668502405025e-4).epsilon(1e-6));
}

TEST_CASE("validation entry points") {
    CHECK(parse_level("quick") == Level::Quick);
    CHECK(parse_level("full") == Level::Full);
    CHECK_THROWS(parse_level("medium"));
    CHECK(criterion_name(1) == "switch_chain_stationarity");
    CHECK_THROWS(criterion_name(0));
    CHECK_THROWS(criterion_name(13));
    ValidationOptions o;
    o.level = Level::Quick;
    const auto r = run_criterion(4, o);
    CHECK(r.pass);
    CHECK(summary_line(r).rfind("PASS", 0) == 0);
    CHECK(r.to_json().at("detail").at("steiner_violations") == 0);
}
