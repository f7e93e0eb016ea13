#include "herdsim/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "herdsim/contact_dynamic.hpp"
#include "herdsim/embedded_herds.hpp"
#include "herdsim/h_herds.hpp"
#include "herdsim/herds_sim.hpp"
#include "herdsim/parallel.hpp"
#include "herdsim/switch_graph.hpp"
#include "herdsim/tree_algebra.hpp"
#include "herdsim/validation.hpp"

#ifndef HERDSIM_VERSION
#define HERDSIM_VERSION "0.0.0"
#endif

namespace herdsim {

using nlohmann::json;

const char* version() { return HERDSIM_VERSION; }

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"simulate-herds", "simulate-hherds", "pf",       "lambda-bar",
                                                "simulate-cp",    "extinction-scan", "embedded", "validate"};
    return names;
}

json default_config(const std::string& command) {
    const std::uint64_t seed = 1;
    if (command == "pf") return {{"d", 3}, {"h", 1}, {"lambda", 1.0}, {"v", 1.0}, {"with_vector", false}};
    if (command == "lambda-bar") return {{"d", 3}, {"h", 1}, {"v", 1.0}, {"tol", 1e-3}};
    if (command == "simulate-herds")
        return {{"d", 3},         {"lambda", 1.0},           {"v", 1.0},         {"reps", 1000},
                {"horizon", 100.0}, {"event_cap", 100000000}, {"population_cap", 2000}, {"seed", seed}};
    if (command == "simulate-hherds")
        return {{"d", 3},      {"h", 2},          {"lambda", 1.0},          {"v", 1.0},
                {"reps", 1000}, {"horizon", 100.0}, {"event_cap", 100000000}, {"population_cap", 2000}, {"seed", seed}};
    if (command == "simulate-cp")
        return {{"n", 100},       {"d", 3},                  {"lambda", 1.0}, {"v", 1.0},
                {"reps", 100},    {"horizon", 1000.0},       {"event_cap", 1000000000},
                {"seed", seed},   {"record_wall_time", false}};
    if (command == "extinction-scan")
        return {{"n_grid", {100, 200, 400}}, {"lambda_grid", json::array({1.0})},       {"v_grid", json::array({1.0})},
                {"d", 3},                    {"reps", 100},               {"horizon", 1000.0},
                {"event_cap", 1000000000},   {"seed", seed},              {"record_wall_time", false}};
    if (command == "embedded")
        return {{"n", 2000},      {"d", 3},         {"h", 2},           {"lambda", 1.0},     {"v", 1.0},
                {"herds", 10},    {"reps", 10},     {"horizon", 5.0},   {"event_cap", 100000000},
                {"seed", seed},   {"check_every", 0}, {"eps0", nullptr}, {"eps1", nullptr}, {"eps2", nullptr},
                {"delta", nullptr}, {"mu_bar", nullptr}};
    if (command == "validate") return {{"level", "quick"}, {"seed", ValidationOptions{}.seed}, {"criteria", json::array()}};
    throw ConfigError("unknown command '" + command + "'");
}

namespace {

bool same_kind(const json& def, const json& value) {
    if (def.is_null()) return value.is_number() || value.is_null();
    if (def.is_boolean()) return value.is_boolean();
    if (def.is_number_unsigned() || def.is_number_integer())
        return value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
    if (def.is_number()) return value.is_number();
    if (def.is_string()) return value.is_string();
    if (def.is_array()) {
        if (!value.is_array()) return false;
        for (auto& x : value)
            if (!x.is_number()) return false;
        return true;
    }
    return false;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

double num(const json& c, const char* key) { return c.at(key).get<double>(); }
std::uint64_t count(const json& c, const char* key) { return c.at(key).get<std::uint64_t>(); }

void check_ranges(const std::string& command, const json& c) {
    auto positive = [&](const char* key) { require(num(c, key) > 0, std::string(key) + " must be positive"); };
    auto nonneg = [&](const char* key) {
        require(num(c, key) >= 0 && std::isfinite(num(c, key)), std::string(key) + " must be finite and nonnegative");
    };
    if (c.contains("d")) require(num(c, "d") >= 3 && num(c, "d") <= 16, "d must lie in [3, 16]");
    if (c.contains("h")) require(num(c, "h") >= 1 && num(c, "h") <= 3, "h must lie in [1, 3]");
    for (const char* key : {"lambda", "v"})
        if (c.contains(key)) nonneg(key);
    for (const char* key : {"reps", "horizon", "event_cap", "tol"})
        if (c.contains(key)) positive(key);
    if (c.contains("n")) {
        require(num(c, "n") >= 2, "n must be at least 2");
        require(count(c, "n") * count(c, "d") % 2 == 0, "n*d must be even");
    }
    if (command == "extinction-scan") {
        for (const char* key : {"n_grid", "lambda_grid", "v_grid"}) require(!c.at(key).empty(), std::string(key) + " must not be empty");
        for (auto& n : c.at("n_grid")) {
            require(n.is_number_unsigned() || (n.is_number_integer() && n.get<std::int64_t>() >= 2), "n_grid entries must be integers >= 2");
            require(n.get<std::uint64_t>() >= 2 && n.get<std::uint64_t>() * count(c, "d") % 2 == 0,
                    "n_grid entries must be at least 2 with n*d even");
        }
        for (auto& x : c.at("lambda_grid")) require(x.get<double>() >= 0, "lambda_grid entries must be nonnegative");
        for (auto& x : c.at("v_grid")) require(x.get<double>() >= 0, "v_grid entries must be nonnegative");
    }
    if (command == "embedded") {
        for (const char* key : {"eps0", "eps1", "eps2", "delta", "mu_bar"})
            if (!c.at(key).is_null()) nonneg(key);
    }
    if (command == "validate") {
        require(c.at("level") == "quick" || c.at("level") == "full", "level must be quick or full");
        for (auto& id : c.at("criteria"))
            require(id.is_number_integer() && id.get<int>() >= 1 && id.get<int>() <= kCriterionCount,
                    "criteria entries must be integers in [1, " + std::to_string(kCriterionCount) + "]");
    }
}

SimParams sim_params(const json& c) {
    SimParams p;
    p.d = c.at("d").get<int>();
    p.lambda = num(c, "lambda");
    p.v = num(c, "v");
    p.horizon = num(c, "horizon");
    p.event_cap = count(c, "event_cap");
    p.seed = count(c, "seed");
    if (c.contains("population_cap")) p.population_cap = count(c, "population_cap");
    return p;
}

json finite(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Output {
    std::string dir;
    RunSummary& summary;

    // Opens dir/name for writing, or returns nullptr when no directory is set.
    std::unique_ptr<std::ofstream> open(const std::string& name) {
        if (dir.empty()) return nullptr;
        std::filesystem::create_directories(dir);
        const auto path = (std::filesystem::path(dir) / name).string();
        auto f = std::make_unique<std::ofstream>(path);
        if (!*f) throw std::runtime_error("cannot write " + path);
        *f << std::setprecision(12);
        summary.files.push_back(path);
        return f;
    }
};

json run_pf(const json& c) {
    const auto types = enumerate_types(c.at("d").get<int>(), c.at("h").get<int>());
    const auto M = mean_matrix(num(c, "lambda"), num(c, "v"), types);
    return pf_to_json(types, M, pf_eigen(M), c.at("with_vector").get<bool>());
}

json run_lambda_bar(const json& c) {
    const auto types = enumerate_types(c.at("d").get<int>(), c.at("h").get<int>());
    const auto r = lambda_bar(num(c, "v"), types, num(c, "tol"));
    return {{"lambda_hat", r.lambda}, {"lo", r.lo}, {"hi", r.hi}, {"mu_lo", r.mu_lo}, {"mu_hi", r.mu_hi},
            {"evaluations", r.evaluations}, {"dim", types.size()}};
}

json outcome_counts(const std::vector<Outcome>& outcomes) {
    std::uint64_t died = 0, alive = 0, censored = 0, exploded = 0;
    for (auto o : outcomes) {
        died += o == Outcome::Died;
        alive += o == Outcome::Alive;
        censored += o == Outcome::Censored;
        exploded += o == Outcome::Exploded;
    }
    // Survival among runs that were not censored; runs reaching the population cap count as surviving.
    const auto s = Proportion::of(alive + exploded, died + alive + exploded);
    return {{"died", died}, {"alive", alive}, {"censored", censored}, {"exploded", exploded}, {"survival", s.p}, {"survival_se", s.se}};
}

json run_simulate_herds(const json& c, Output& out) {
    const SimParams p = sim_params(c);
    const std::uint64_t reps = count(c, "reps");
    std::vector<HerdsRun> runs(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(p.seed, "herds", i);
        runs[i] = run_herds(p, HerdsState::initial(), rng);
    });
    auto f = out.open("runs.csv");
    if (f) *f << "run,outcome,end_time,events,final_herds,final_particles,max_herds\n";
    std::vector<Outcome> outcomes;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto& r = runs[i];
        outcomes.push_back(r.outcome);
        if (f)
            *f << i << ',' << to_string(r.outcome) << ',' << r.end_time << ',' << r.events << ',' << r.final_herds << ','
               << r.final_particles << ',' << r.max_herds << '\n';
    }
    return {{"reps", reps}, {"outcomes", outcome_counts(outcomes)}};
}

json run_simulate_hherds(const json& c, Output& out) {
    const SimParams p = sim_params(c);
    const int h = c.at("h").get<int>();
    const std::uint64_t reps = count(c, "reps");
    const auto init = HHerdsState::initial(p.d, h);
    std::vector<HHerdsRun> runs(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(p.seed, "hherds", i);
        runs[i] = run_h_herds(p, h, init, rng);
    });
    auto f = out.open("runs.csv");
    if (f) *f << "run,outcome,end_time,events,tau_leaf,final_herds,final_particles,leaf_distance_violations\n";
    std::vector<Outcome> outcomes;
    std::uint64_t violations = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto& r = runs[i];
        outcomes.push_back(r.outcome);
        violations += r.leaf_distance_violations;
        if (f)
            *f << i << ',' << to_string(r.outcome) << ',' << r.end_time << ',' << r.events << ',' << r.tau_leaf << ','
               << r.final_herds << ',' << r.final_particles << ',' << r.leaf_distance_violations << '\n';
    }
    const auto types = enumerate_types(p.d, h);
    return {{"reps", reps}, {"outcomes", outcome_counts(outcomes)}, {"leaf_distance_violations", violations},
            {"growth_exponent", growth_exponent(p.lambda, p.v, types)}};
}

json scan_to_json(const std::vector<ScanSummary>& cells) {
    json rows = json::array();
    for (auto& s : cells)
        rows.push_back({{"n", s.cell.n},           {"lambda", s.cell.lambda}, {"v", s.cell.v},
                        {"reps", s.reps},          {"censored", s.censored},  {"censor_fraction", s.censor_fraction()},
                        {"q25", finite(s.q25)},    {"median", finite(s.median)}, {"q75", finite(s.q75)}});
    return rows;
}

json run_scan(const std::vector<ScanCell>& grid, const json& c, Output& out) {
    ScanOptions so;
    so.d = c.at("d").get<std::uint32_t>();
    so.reps = count(c, "reps");
    so.horizon = num(c, "horizon");
    so.event_cap = count(c, "event_cap");
    so.seed = count(c, "seed");
    so.record_wall_time = c.at("record_wall_time").get<bool>();
    std::vector<ExtinctionRecord> runs;
    const auto cells = extinction_scan(grid, so, &runs);
    if (auto f = out.open("runs.csv")) write_runs_csv(*f, runs);
    if (auto f = out.open("summary.csv")) write_summary_csv(*f, cells);
    return {{"cells", scan_to_json(cells)}};
}

json run_simulate_cp(const json& c, Output& out) {
    return run_scan({{c.at("n").get<std::uint32_t>(), num(c, "lambda"), num(c, "v")}}, c, out);
}

json run_extinction_scan(const json& c, Output& out) {
    std::vector<ScanCell> grid;
    for (auto& n : c.at("n_grid"))
        for (auto& lambda : c.at("lambda_grid"))
            for (auto& v : c.at("v_grid")) grid.push_back({n.get<std::uint32_t>(), lambda.get<double>(), v.get<double>()});
    return run_scan(grid, c, out);
}

json run_embedded_cmd(const json& c, Output& out) {
    const auto model = EmbeddedModel::build(c.at("d").get<int>(), c.at("h").get<int>(), num(c, "lambda"), num(c, "v"));
    MonitorConstants k = default_constants(model);
    if (!c.at("eps0").is_null()) k.eps0 = num(c, "eps0");
    if (!c.at("eps1").is_null()) k.eps1 = num(c, "eps1");
    if (!c.at("eps2").is_null()) k.eps2 = num(c, "eps2");
    if (!c.at("delta").is_null()) k.delta = num(c, "delta");
    if (!c.at("mu_bar").is_null()) k.mu_bar = num(c, "mu_bar");
    const auto n = c.at("n").get<std::uint32_t>();
    const auto d = c.at("d").get<std::uint32_t>();
    const auto reps = count(c, "reps");
    const auto seed = count(c, "seed");
    EmbeddedOptions eo;
    eo.horizon = num(c, "horizon");
    eo.event_cap = count(c, "event_cap");
    eo.check_every = count(c, "check_every");
    std::vector<EmbeddedRun> runs(reps);
    std::vector<std::size_t> installed(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(seed, "embedded", i);
        Matching g = sample_matching(n, d, rng);
        auto psi = build_initial(g, model.h, count(c, "herds"));
        installed[i] = psi.size();
        runs[i] = run_embedded(model, k, std::move(g), std::move(psi), rng, eo);
    });
    auto f = out.open("runs.csv");
    if (f)
        *f << "run,initial_herds,outcome,end_time,events,final_herds,final_X,neutral,good_active,good_inactive,bad,"
              "bad_compensator,integrity_checks,violations\n";
    json monitors = json::array();
    std::vector<Outcome> outcomes;
    std::uint64_t violations = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto& r = runs[i];
        outcomes.push_back(r.outcome);
        violations += r.violations;
        json m = r.monitors.to_json();
        m["run"] = i;
        m["violation_messages"] = r.violation_messages;
        monitors.push_back(std::move(m));
        if (f)
            *f << i << ',' << installed[i] << ',' << to_string(r.outcome) << ',' << r.end_time << ',' << r.events << ','
               << r.final_herds << ',' << r.final_X << ',' << r.switches[0] << ',' << r.switches[1] << ',' << r.switches[2]
               << ',' << r.switches[3] << ',' << r.bad_compensator << ',' << r.integrity_checks << ',' << r.violations << '\n';
    }
    if (auto mf = out.open("monitors.json")) *mf << monitors.dump(2) << '\n';
    return {{"reps", reps},
            {"constants", k.to_json()},
            {"outcomes", outcome_counts(outcomes)},
            {"integrity_violations", violations},
            {"pf", {{"mu", model.pf.mu}, {"f_min", model.pf.f_min}, {"f_max", model.pf.f_max}, {"dim", model.types.size()}}}};
}

json run_validate(const json& c, Output& out, std::ostream& log, bool& ok) {
    ValidationOptions vo;
    vo.level = parse_level(c.at("level").get<std::string>());
    vo.seed = count(c, "seed");
    std::vector<int> ids;
    for (auto& id : c.at("criteria")) ids.push_back(id.get<int>());
    if (ids.empty())
        for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
    json results = json::array();
    int passed = 0;
    for (int id : ids) {
        const auto r = run_criterion(id, vo);
        log << summary_line(r) << std::endl;
        passed += r.pass;
        results.push_back(r.to_json());
    }
    ok = passed == static_cast<int>(ids.size());
    if (auto f = out.open("validation.json")) *f << results.dump(2) << '\n';
    return {{"level", c.at("level")}, {"passed", passed}, {"total", ids.size()}, {"results", results}};
}

}  // namespace

json resolve_config(const std::string& command, const json& file, const json& overrides) {
    const json defaults = default_config(command);
    json config = defaults;
    for (const json* layer : {&file, &overrides}) {
        if (layer->is_null()) continue;
        require(layer->is_object(), "config must be a JSON object");
        for (auto& [key, value] : layer->items()) {
            require(config.contains(key), "unknown key '" + key + "' for " + command);
            require(same_kind(defaults.at(key), value), "key '" + key + "' has the wrong type: " + value.dump());
            config[key] = value;
        }
    }
    check_ranges(command, config);
    return config;
}

std::string config_hash(const json& config) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunSummary run_experiment(const std::string& command, const json& config, const std::string& out_dir, std::ostream& log) {
    RunSummary rs;
    Output out{out_dir, rs};
    json result;
    if (command == "pf")
        result = run_pf(config);
    else if (command == "lambda-bar")
        result = run_lambda_bar(config);
    else if (command == "simulate-herds")
        result = run_simulate_herds(config, out);
    else if (command == "simulate-hherds")
        result = run_simulate_hherds(config, out);
    else if (command == "simulate-cp")
        result = run_simulate_cp(config, out);
    else if (command == "extinction-scan")
        result = run_extinction_scan(config, out);
    else if (command == "embedded")
        result = run_embedded_cmd(config, out);
    else if (command == "validate")
        result = run_validate(config, out, log, rs.ok);
    else
        throw ConfigError("unknown command '" + command + "'");
    result["provenance"] = {{"command", command},
                            {"version", version()},
                            {"seed", config.contains("seed") ? config.at("seed") : json(nullptr)},
                            {"config_hash", config_hash(config)},
                            {"config", config}};
    rs.summary = std::move(result);
    if (auto f = out.open("summary.json")) *f << rs.summary.dump(2) << '\n';
    return rs;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) return kExitConfig;
    if (dynamic_cast<const PFNonConvergence*>(&e) || dynamic_cast<const EnumerationOverflow*>(&e) ||
        dynamic_cast<const BracketError*>(&e))
        return kExitNumerical;
    return kExitFailure;
}

}  // namespace herdsim
