#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "homethru/time.hpp"

namespace homethru::agent {

struct ScheduleConfig {
    std::int64_t wan_interval_seconds = 3600;
    std::int64_t wan_jitter_seconds = 300;
    // Advisory for browser clients; the agent does not schedule LAN tests.
    std::int64_t lan_background_interval_seconds = 10800;
    std::int64_t min_gap_seconds = 60;
    std::string wan_endpoint;
    std::string household_id;
};

// Throws InvalidArgument unless intervals are positive, jitter is nonnegative,
// and both min_gap and jitter are below the WAN interval.
void validate(const ScheduleConfig& config);

enum class EventKind { wan_test };

struct ScheduledEvent {
    Timestamp fire_at_utc{};
    std::chrono::milliseconds offset{};  // from the schedule start
    EventKind kind = EventKind::wan_test;

    friend bool operator==(const ScheduledEvent&, const ScheduledEvent&) = default;
};

// Unbounded WAN schedule anchored at `start`: event k (k >= 1) fires at
// k * interval plus a seeded offset drawn uniformly from
// [-jitter / 2, +jitter / 2] (millisecond resolution). Consecutive events are
// therefore interval +/- jitter apart and the schedule never drifts.
class WanSchedule {
public:
    WanSchedule(const ScheduleConfig& config, std::uint64_t seed, Timestamp start);

    ScheduledEvent event(std::uint64_t k) const;
    Timestamp start() const { return start_; }

private:
    std::int64_t interval_ms_;
    std::int64_t jitter_ms_;
    std::uint64_t seed_;
    Timestamp start_;
};

// Events of WanSchedule(config, seed, start) with offset <= horizon.
// Throws InvalidArgument when horizon < interval or the config is invalid.
std::vector<ScheduledEvent> build_schedule(const ScheduleConfig& config, std::int64_t horizon_seconds,
                                           std::uint64_t seed, Timestamp start = Timestamp{});

}  // namespace homethru::agent
