#pragma once

#include <json.hpp>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace herdsim {

// Invalid configuration: unknown command or key, wrong type, value out of range. Exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // validate found a failing criterion, or an unexpected error
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

const char* version();

const std::vector<std::string>& command_names();

// Every key a command accepts, with its default. A null default means "derived from the model"
// and accepts any number.
nlohmann::json default_config(const std::string& command);

// Defaults, then the config file's object, then the flag overrides. Unknown keys, type mismatches
// and out-of-range values throw ConfigError.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& file, const nlohmann::json& overrides);

// FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct RunSummary {
    nlohmann::json summary;          // includes a "provenance" object
    std::vector<std::string> files;  // artifacts written under out_dir
    bool ok = true;                  // false when validate saw a failing criterion
};

// Runs a resolved config. Artifacts go to out_dir (created if missing); an empty out_dir writes
// nothing but the returned summary. Progress lines go to log.
RunSummary run_experiment(const std::string& command, const nlohmann::json& config, const std::string& out_dir,
                          std::ostream& log);

// Exit code for an exception escaping run_experiment or resolve_config.
int exit_code_for(const std::exception& e);

}  // namespace herdsim
