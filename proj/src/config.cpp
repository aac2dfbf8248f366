#include "wattrank/config.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/core.h>
#include <json.hpp>

#include "wattrank/csv.hpp"
#include "wattrank/error.hpp"

namespace wattrank::config {

namespace {

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off" || text.empty()) return false;
    throw ValidationError(what + ": expected a boolean, got '" + text + "'");
}

double parse_number(const std::string& text, const std::string& what) {
    try {
        return csv::parse_double(text, what, 1);
    } catch (const ParseError&) {
        throw ValidationError(what + ": expected a number, got '" + text + "'");
    }
}

nlohmann::json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("config file not found: " + path.string(), "config");
    try {
        auto j = nlohmann::json::parse(in);
        if (!j.is_object()) throw ValidationError("config file must hold a JSON object: " + path.string());
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("invalid config file " + path.string() + ": " + e.what(), "config");
    }
}

}  // namespace

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

GlobalConfig resolve(const Overrides& flags, const EnvLookup& env) {
    std::optional<std::filesystem::path> file_path;
    if (flags.config_file) {
        file_path = *flags.config_file;
    } else if (auto v = env("WATTRANK_CONFIG")) {
        file_path = *v;
    } else if (auto home = env("HOME")) {
        auto candidate = std::filesystem::path(*home) / ".config" / "wattrank" / "config.json";
        if (std::filesystem::exists(candidate)) file_path = candidate;
    }
    const nlohmann::json file = file_path ? read_config_file(*file_path) : nlohmann::json::object();

    GlobalConfig cfg;
    for (const char* key : {"store", "alpha", "beta", "appliances", "lenient"}) cfg.origin[key] = "default";

    // Later assignments win: file, then env, then flag.
    try {
        if (file.contains("store")) cfg.store_path = file.at("store").get<std::string>(), cfg.origin["store"] = "file";
        if (file.contains("alpha")) cfg.alpha = file.at("alpha").get<double>(), cfg.origin["alpha"] = "file";
        if (file.contains("beta")) cfg.beta = file.at("beta").get<double>(), cfg.origin["beta"] = "file";
        if (file.contains("appliances")) {
            cfg.appliance_file = file.at("appliances").get<std::string>();
            cfg.origin["appliances"] = "file";
        }
        if (file.contains("lenient")) cfg.lenient = file.at("lenient").get<bool>(), cfg.origin["lenient"] = "file";
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid value in config file: ") + e.what(), "config");
    }

    if (auto v = env("WATTRANK_STORE")) cfg.store_path = *v, cfg.origin["store"] = "env";
    if (auto v = env("WATTRANK_ALPHA")) cfg.alpha = parse_number(*v, "WATTRANK_ALPHA"), cfg.origin["alpha"] = "env";
    if (auto v = env("WATTRANK_BETA")) cfg.beta = parse_number(*v, "WATTRANK_BETA"), cfg.origin["beta"] = "env";
    if (auto v = env("WATTRANK_APPLIANCES")) cfg.appliance_file = *v, cfg.origin["appliances"] = "env";
    if (auto v = env("WATTRANK_LENIENT")) cfg.lenient = parse_bool(*v, "WATTRANK_LENIENT"), cfg.origin["lenient"] = "env";

    if (flags.store_path) cfg.store_path = *flags.store_path, cfg.origin["store"] = "flag";
    if (flags.alpha) cfg.alpha = *flags.alpha, cfg.origin["alpha"] = "flag";
    if (flags.beta) cfg.beta = *flags.beta, cfg.origin["beta"] = "flag";
    if (flags.appliance_file) cfg.appliance_file = *flags.appliance_file, cfg.origin["appliances"] = "flag";
    if (flags.lenient) cfg.lenient = *flags.lenient, cfg.origin["lenient"] = "flag";

    if (!(cfg.alpha > 0.0)) throw ValidationError("alpha must be > 0", "alpha");
    if (!(cfg.beta > 0.0)) throw ValidationError("beta must be > 0", "beta");
    return cfg;
}

std::string describe(const GlobalConfig& c) {
    std::string out;
    out += fmt::format("store       = {} ({})\n", c.store_path.string(), c.origin.at("store"));
    out += fmt::format("alpha       = {:.6g} ({})\n", c.alpha, c.origin.at("alpha"));
    out += fmt::format("beta        = {:.6g} ({})\n", c.beta, c.origin.at("beta"));
    out += fmt::format("appliances  = {} ({})\n", c.appliance_file ? c.appliance_file->string() : "<none>",
                       c.origin.at("appliances"));
    out += fmt::format("lenient     = {} ({})\n", c.lenient ? "true" : "false", c.origin.at("lenient"));
    return out;
}

}  // namespace wattrank::config
