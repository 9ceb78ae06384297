#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homethru/sample.hpp"

namespace homethru::analysis {

// Six hours.
inline constexpr std::int64_t kDefaultWindowSeconds = 21600;

// One epoch-aligned window in which a household has both a WiFi and an access
// measurement, summarized by the per-path medians.
struct CoincidentWindow {
    Timestamp window_start_utc{};
    std::string household_id;
    double median_wifi_mbps = 0.0;
    double median_access_mbps = 0.0;
    std::size_t wifi_sample_count = 0;
    std::size_t access_sample_count = 0;
    // median_wifi_mbps < median_access_mbps; ties are not bottlenecks.
    bool is_bottleneck = false;

    friend bool operator==(const CoincidentWindow&, const CoincidentWindow&) = default;
};

// Start of the epoch-aligned window holding t (floor, also for pre-1970 t).
Timestamp window_start_for(Timestamp t, std::int64_t window_seconds);

// Groups one household's samples into epoch-aligned windows and emits, in
// time order, only windows containing both paths. Even-sized groups take the
// mean of the two middle values as the median.
//
// Throws InvalidArgument if window_seconds <= 0 or the samples span more than
// one household.
std::vector<CoincidentWindow> resample_windows(std::span<const ThroughputSample> samples,
                                               std::int64_t window_seconds = kDefaultWindowSeconds);

}  // namespace homethru::analysis
