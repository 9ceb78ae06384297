#include "homethru/analysis/windows.hpp"

#include <map>

#include <fmt/format.h>

#include "homethru/analysis/statistics.hpp"
#include "homethru/errors.hpp"

namespace homethru::analysis {

Timestamp window_start_for(Timestamp t, std::int64_t window_seconds) {
    const std::int64_t width_ms = window_seconds * 1000;
    const std::int64_t ms = to_epoch_ms(t);
    std::int64_t index = ms / width_ms;
    if (ms % width_ms != 0 && ms < 0) --index;
    return from_epoch_ms(index * width_ms);
}

std::vector<CoincidentWindow> resample_windows(std::span<const ThroughputSample> samples,
                                               std::int64_t window_seconds) {
    if (window_seconds <= 0) throw InvalidArgument("window length must be positive");

    struct Bucket {
        std::vector<double> wifi;
        std::vector<double> access;
    };
    std::map<Timestamp, Bucket> buckets;
    for (const auto& sample : samples) {
        if (sample.household_id != samples.front().household_id)
            throw InvalidArgument(fmt::format("resampling mixes households '{}' and '{}'",
                                              samples.front().household_id, sample.household_id));
        auto& bucket = buckets[window_start_for(sample.timestamp_utc, window_seconds)];
        (sample.path == MeasurementPath::lan_wifi ? bucket.wifi : bucket.access).push_back(sample.throughput_mbps);
    }

    std::vector<CoincidentWindow> windows;
    for (auto& [start, bucket] : buckets) {
        if (bucket.wifi.empty() || bucket.access.empty()) continue;
        CoincidentWindow w;
        w.window_start_utc = start;
        w.household_id = samples.front().household_id;
        w.wifi_sample_count = bucket.wifi.size();
        w.access_sample_count = bucket.access.size();
        w.median_wifi_mbps = median(std::move(bucket.wifi));
        w.median_access_mbps = median(std::move(bucket.access));
        w.is_bottleneck = w.median_wifi_mbps < w.median_access_mbps;
        windows.push_back(std::move(w));
    }
    return windows;
}

}  // namespace homethru::analysis
