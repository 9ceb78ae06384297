#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "homethru/agent/config.hpp"
#include "homethru/sample.hpp"
#include "homethru/store/sample_store.hpp"

namespace homethru::agent {

struct AgentHooks {
    // Runs one WAN test; throws on failure. Defaults to a download test
    // against config.schedule.wan_endpoint.
    std::function<ThroughputSample(const AgentConfig&)> run_wan_test;
    // Persists one sample; throws StorageError on failure. Defaults to the store.
    std::function<void(const ThroughputSample&)> persist;
};

struct AgentStats {
    std::uint64_t wan_slots = 0;
    std::uint64_t wan_completed = 0;
    std::uint64_t wan_skipped = 0;
    std::uint64_t persisted = 0;
    std::uint64_t pending = 0;
    std::uint64_t dropped = 0;
};

// The measurement daemon: hosts the LAN download server and the HTTP API,
// fires WAN tests on the jittered hourly schedule, and persists WAN results.
// All tests go through one TestSlot, so LAN and WAN tests never overlap.
// A failed WAN test is logged and skipped; a failed store write is queued
// (bounded, oldest dropped first) and retried before the next write.
class Agent {
public:
    // Starts everything; throws StartupError or InvalidArgument.
    Agent(AgentConfig config, store::SampleStore& store, AgentHooks hooks = {});
    ~Agent();

    Agent(const Agent&) = delete;
    Agent& operator=(const Agent&) = delete;

    std::uint16_t lan_port() const;
    std::uint16_t api_port() const;
    AgentStats stats() const;

    // Stops the scheduler and servers and makes a last attempt to flush
    // queued samples. Idempotent.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace homethru::agent
