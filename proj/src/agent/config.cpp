#include "homethru/agent/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "homethru/errors.hpp"
#include "homethru/probe/endpoint.hpp"

namespace homethru::agent {

namespace {

constexpr std::array kKeys = {
    "household_id",     "wan_endpoint", "wan_interval_seconds",  "wan_jitter_seconds",
    "lan_background_interval_seconds", "min_gap_seconds", "store_path", "lan_bind",
    "api_bind",         "api_token",    "web_root",              "lan_rate_limit_mbps",
    "device_id",        "test_duration_seconds", "schedule_seed", "pending_queue_limit",
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end)
        throw InvalidArgument(fmt::format("config key '{}': '{}' is not a valid number", key, text));
    return value;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace

std::optional<std::string> system_getenv(const std::string& name) {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr) return std::nullopt;
    return std::string(value);
}

void set_config_value(AgentConfig& c, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "household_id") {
        c.schedule.household_id = value;
    } else if (key == "wan_endpoint") {
        c.schedule.wan_endpoint = value;
    } else if (key == "wan_interval_seconds") {
        c.schedule.wan_interval_seconds = parse_number<std::int64_t>(key, value);
    } else if (key == "wan_jitter_seconds") {
        c.schedule.wan_jitter_seconds = parse_number<std::int64_t>(key, value);
    } else if (key == "lan_background_interval_seconds") {
        c.schedule.lan_background_interval_seconds = parse_number<std::int64_t>(key, value);
    } else if (key == "min_gap_seconds") {
        c.schedule.min_gap_seconds = parse_number<std::int64_t>(key, value);
    } else if (key == "store_path") {
        c.store_path = value;
    } else if (key == "lan_bind") {
        c.lan_bind = value;
    } else if (key == "api_bind") {
        c.api_bind = value;
    } else if (key == "api_token") {
        c.api_token = value.empty() ? std::nullopt : std::optional(value);
    } else if (key == "web_root") {
        c.web_root = value.empty() ? std::nullopt : std::optional<std::filesystem::path>(value);
    } else if (key == "lan_rate_limit_mbps") {
        c.lan_rate_limit_mbps = value.empty() ? std::nullopt : std::optional(parse_number<double>(key, value));
    } else if (key == "device_id") {
        c.device_id = value;
    } else if (key == "test_duration_seconds") {
        c.test.duration_seconds = parse_number<double>(key, value);
    } else if (key == "schedule_seed") {
        c.schedule_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "pending_queue_limit") {
        c.pending_queue_limit = parse_number<std::size_t>(key, value);
    } else {
        throw InvalidArgument(fmt::format("unknown config key '{}'", key));
    }
}

AgentConfig load_agent_config(const std::optional<std::filesystem::path>& file, const Getenv& getenv) {
    AgentConfig config;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw StorageError(fmt::format("cannot read config file {}", file->string()));
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::read_ini(in, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw InvalidArgument(fmt::format("config file {}: {}", file->string(), e.message()));
        }
        for (const auto& [key, node] : tree) {
            if (!node.empty())
                throw InvalidArgument(fmt::format("config file {}: sections are not supported ('{}')", file->string(), key));
            set_config_value(config, key, node.data());
        }
    }
    for (const std::string key : kKeys) {
        std::string name = "HOMETHRU_" + key;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
        if (const auto value = getenv(name)) set_config_value(config, key, *value);
    }
    return config;
}

void validate(const AgentConfig& c) {
    validate(c.schedule);
    if (c.schedule.household_id.empty()) throw InvalidArgument("household_id is required");
    if (c.schedule.wan_endpoint.empty()) throw InvalidArgument("wan_endpoint is required");
    probe::parse_endpoint(c.schedule.wan_endpoint);
    probe::parse_endpoint(c.lan_bind);
    probe::parse_endpoint(c.api_bind);
    probe::validate(c.test);
    if (c.lan_rate_limit_mbps && !(*c.lan_rate_limit_mbps > 0.0))
        throw InvalidArgument("lan_rate_limit_mbps must be positive");
    if (c.pending_queue_limit == 0) throw InvalidArgument("pending_queue_limit must be positive");
}

std::string wan_device_id(const AgentConfig& c) {
    return c.device_id.empty() ? c.schedule.household_id + "-router" : c.device_id;
}

std::uint64_t schedule_seed(const AgentConfig& c) {
    if (c.schedule_seed) return *c.schedule_seed;
    // FNV-1a: stable across platforms, unlike std::hash.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : c.schedule.household_id) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace homethru::agent
