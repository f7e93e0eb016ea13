#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

namespace herdsim {

enum class Level { Quick, Full };

Level parse_level(const std::string& text);

struct ValidationOptions {
    Level level = Level::Full;
    std::uint64_t seed = 20240601;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    // Names of the checks that failed, with the observed values.
    std::vector<std::string> failures;
    nlohmann::json detail = nlohmann::json::object();
    double seconds = 0.0;

    nlohmann::json to_json() const;
};

constexpr int kCriterionCount = 12;

std::string criterion_name(int id);

// Runs one acceptance criterion. Full uses the stated sample sizes; Quick divides the
// replication counts so the whole suite fits in a few minutes.
CriterionResult run_criterion(int id, const ValidationOptions& options);

// "PASS"/"FAIL" line for one criterion.
std::string summary_line(const CriterionResult& r);

struct Spearman {
    double rho = 0.0;          // NaN when either sample has no spread
    double p_greater = 1.0;    // one-sided p-value for rho > 0 (t approximation)
    std::size_t n = 0;
};

// Rank correlation with average ranks for ties.
Spearman spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace herdsim
