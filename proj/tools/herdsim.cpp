// herdsim command-line interface: one subcommand per experiment, JSON summary on stdout.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "herdsim/harness.hpp"

namespace {

std::string kebab(std::string key) {
    for (auto& ch : key)
        if (ch == '_') ch = '-';
    return key;
}

// Converts one flag value to the JSON kind of the key's default.
nlohmann::json parse_value(const nlohmann::json& def, const std::string& key, const std::string& text) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw herdsim::ConfigError("--" + kebab(key) + ": not a number: '" + s + "'");
        return x;
    };
    auto integer = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw herdsim::ConfigError("--" + kebab(key) + ": not a nonnegative integer: '" + s + "'");
        return nlohmann::json(std::stoull(s));
    };
    if (def.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(item.find_first_not_of("0123456789") == std::string::npos && !item.empty() ? integer(item)
                                                                                                      : nlohmann::json(number(item)));
        return out;
    }
    if (def.is_number_integer() || def.is_number_unsigned()) return integer(text);
    if (def.is_string()) return text;
    return number(text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Herds, h-herds and contact processes on dynamic random regular graphs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(herdsim::version()));

    struct Command {
        CLI::App* sub;
        std::map<std::string, std::string> values;
        std::map<std::string, bool> flags;
        std::string config_file;
        std::string out_dir;
    };
    std::map<std::string, Command> commands;
    for (const auto& name : herdsim::command_names()) {
        Command& c = commands[name];
        c.sub = app.add_subcommand(name);
        // "--h" is the herd radius, so help is long-form only.
        c.sub->set_help_flag("--help", "print this help and exit");
        c.sub->add_option("--config", c.config_file, "JSON config file; flags override it");
        c.sub->add_option("--out-dir", c.out_dir, "directory for CSV/JSON artifacts");
        const auto defaults = herdsim::default_config(name);
        for (auto& [key, def] : defaults.items()) {
            const std::string flag = "--" + kebab(key);
            const std::string help = "default: " + def.dump();
            if (def.is_boolean())
                c.sub->add_flag(flag, c.flags[key], help);
            else
                c.sub->add_option(flag, c.values[key], help + (def.is_array() ? " (comma-separated)" : ""));
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : herdsim::kExitConfig;
    }

    for (auto& [name, c] : commands) {
        if (!c.sub->parsed()) continue;
        try {
            nlohmann::json file;
            if (!c.config_file.empty()) {
                std::ifstream in(c.config_file);
                if (!in) throw herdsim::ConfigError("cannot read config file " + c.config_file);
                try {
                    file = nlohmann::json::parse(in);
                } catch (const nlohmann::json::parse_error& e) {
                    throw herdsim::ConfigError(std::string("config file is not valid JSON: ") + e.what());
                }
            }
            const auto defaults = herdsim::default_config(name);
            nlohmann::json overrides = nlohmann::json::object();
            for (auto& [key, text] : c.values)
                if (c.sub->count("--" + kebab(key))) overrides[key] = parse_value(defaults.at(key), key, text);
            for (auto& [key, on] : c.flags)
                if (c.sub->count("--" + kebab(key))) overrides[key] = on;
            const auto config = herdsim::resolve_config(name, file, overrides);
            const auto result = herdsim::run_experiment(name, config, c.out_dir, std::cerr);
            std::cout << result.summary.dump(2) << std::endl;
            return result.ok ? herdsim::kExitOk : herdsim::kExitFailure;
        } catch (const std::exception& e) {
            std::cerr << "herdsim " << name << ": " << e.what() << std::endl;
            return herdsim::exit_code_for(e);
        }
    }
    return herdsim::kExitConfig;
}
