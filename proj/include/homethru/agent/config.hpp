#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "homethru/agent/schedule.hpp"
#include "homethru/probe/throughput.hpp"

namespace homethru::agent {

struct AgentConfig {
    ScheduleConfig schedule;
    std::filesystem::path store_path = "homethru-samples.jsonl";
    std::string lan_bind = "0.0.0.0:4443";
    std::string api_bind = "0.0.0.0:8080";
    std::optional<std::string> api_token;
    std::optional<std::filesystem::path> web_root;
    std::optional<double> lan_rate_limit_mbps;
    // Device label on WAN samples; "<household_id>-router" when empty.
    std::string device_id;
    probe::TestConfig test;
    // Jitter seed; derived from household_id when absent.
    std::optional<std::uint64_t> schedule_seed;
    // WAN samples kept in memory while the store is failing.
    std::size_t pending_queue_limit = 256;
};

// Config keys, one "key = value" per line ('#' or ';' starts a comment):
//   household_id, wan_endpoint, wan_interval_seconds, wan_jitter_seconds,
//   lan_background_interval_seconds, min_gap_seconds, store_path, lan_bind,
//   api_bind, api_token, web_root, lan_rate_limit_mbps, device_id,
//   test_duration_seconds, schedule_seed, pending_queue_limit
// Every key can be overridden by the environment variable HOMETHRU_<KEY>
// (upper case), e.g. HOMETHRU_WAN_ENDPOINT.
using Getenv = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> system_getenv(const std::string& name);

// Throws InvalidArgument on unknown keys or malformed values, StorageError
// when the file cannot be read.
AgentConfig load_agent_config(const std::optional<std::filesystem::path>& file, const Getenv& getenv = system_getenv);

// Applies one key; shared by file parsing, environment, and command-line overrides.
void set_config_value(AgentConfig& config, const std::string& key, const std::string& value);

// Throws InvalidArgument: schedule rules, a nonempty household_id and
// wan_endpoint, a valid test config.
void validate(const AgentConfig& config);

std::string wan_device_id(const AgentConfig& config);
std::uint64_t schedule_seed(const AgentConfig& config);

}  // namespace homethru::agent
