#include "homethru/agent/schedule.hpp"

#include <cmath>

#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru::agent {

namespace {

// SplitMix64 finalizer: a fixed, portable mix of (seed, k).
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void validate(const ScheduleConfig& c) {
    if (c.wan_interval_seconds <= 0) throw InvalidArgument("wan_interval_seconds must be positive");
    if (c.wan_jitter_seconds < 0) throw InvalidArgument("wan_jitter_seconds must be nonnegative");
    if (c.lan_background_interval_seconds <= 0)
        throw InvalidArgument("lan_background_interval_seconds must be positive");
    if (c.min_gap_seconds <= 0) throw InvalidArgument("min_gap_seconds must be positive");
    if (c.min_gap_seconds >= c.wan_interval_seconds)
        throw InvalidArgument(fmt::format("min_gap_seconds ({}) must be below wan_interval_seconds ({})",
                                          c.min_gap_seconds, c.wan_interval_seconds));
    if (c.wan_jitter_seconds >= c.wan_interval_seconds)
        throw InvalidArgument(fmt::format("wan_jitter_seconds ({}) must be below wan_interval_seconds ({})",
                                          c.wan_jitter_seconds, c.wan_interval_seconds));
}

WanSchedule::WanSchedule(const ScheduleConfig& config, std::uint64_t seed, Timestamp start)
    : interval_ms_(config.wan_interval_seconds * 1000),
      jitter_ms_(config.wan_jitter_seconds * 1000),
      seed_(seed),
      start_(start) {
    validate(config);
}

ScheduledEvent WanSchedule::event(std::uint64_t k) const {
    const double unit = static_cast<double>(mix(seed_ ^ mix(k)) >> 11) * 0x1.0p-53;
    const auto jitter = static_cast<std::int64_t>(std::llround((unit - 0.5) * static_cast<double>(jitter_ms_)));
    const std::chrono::milliseconds offset{static_cast<std::int64_t>(k) * interval_ms_ + jitter};
    return {start_ + offset, offset, EventKind::wan_test};
}

std::vector<ScheduledEvent> build_schedule(const ScheduleConfig& config, std::int64_t horizon_seconds,
                                           std::uint64_t seed, Timestamp start) {
    validate(config);
    if (horizon_seconds < config.wan_interval_seconds)
        throw InvalidArgument(fmt::format("horizon ({} s) is shorter than the WAN interval ({} s)", horizon_seconds,
                                          config.wan_interval_seconds));
    const WanSchedule schedule(config, seed, start);
    const std::chrono::milliseconds horizon{horizon_seconds * 1000};
    std::vector<ScheduledEvent> events;
    for (std::uint64_t k = 1;; ++k) {
        auto e = schedule.event(k);
        if (e.offset > horizon) break;
        events.push_back(e);
    }
    return events;
}

}  // namespace homethru::agent
