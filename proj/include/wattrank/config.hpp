#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace wattrank::config {

/// Settings shared by every subcommand.
struct GlobalConfig {
    std::filesystem::path store_path = "runs.jsonl";
    double alpha = 5.0;
    double beta = 5.0;
    std::optional<std::filesystem::path> appliance_file;
    bool lenient = false;

    /// Where each value came from: "flag", "env", "file" or "default".
    std::map<std::string, std::string> origin;
};

struct Overrides {
    std::optional<std::string> store_path;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<std::string> appliance_file;
    std::optional<bool> lenient;
    std::optional<std::string> config_file;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
EnvLookup process_env();

/// Flag > environment (WATTRANK_STORE, WATTRANK_ALPHA, WATTRANK_BETA,
/// WATTRANK_APPLIANCES, WATTRANK_LENIENT) > config file > default.
///
/// The config file is a JSON object with keys store, alpha, beta, appliances
/// and lenient. It is taken from the flag, then WATTRANK_CONFIG, then
/// $HOME/.config/wattrank/config.json if that exists.
GlobalConfig resolve(const Overrides& flags, const EnvLookup& env);

std::string describe(const GlobalConfig& config);

}  // namespace wattrank::config
