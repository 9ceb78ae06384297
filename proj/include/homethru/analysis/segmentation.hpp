#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homethru/analysis/tiers.hpp"
#include "homethru/analysis/windows.hpp"

namespace homethru::analysis {

struct ChangeDetectionOptions {
    // Trigger when the leading level over the trailing level exceeds this
    // ratio or falls below its reciprocal.
    double ratio_threshold = 1.5;
    // Trailing comparison span (28 six-hour windows, about a week).
    std::size_t span_windows = 28;
    // Leading span that must show the new level; also the minimum distance
    // between two splits.
    std::size_t sustain_windows = 28;
};

// Finds access-plan changes in a time-ordered window series.
//
// At each index i with a full trailing span before it and a full sustain span
// from it, the median access over [i, i + sustain) is compared with the median
// over [i - span, i). Consecutive indices that pass form a run; within a run
// the split is placed where a two-level fit (least absolute deviation in log
// space, each side at its median) is tightest. Splits closer than
// sustain_windows to the previous accepted one are dropped. Returns the start
// instants of the first window of each new segment.
std::vector<Timestamp> detect_access_change(std::span<const CoincidentWindow> windows,
                                            const ChangeDetectionOptions& options = {});

// A household segment with one access plan. Periods are half-open.
struct VantagePoint {
    std::string vantage_id;
    std::string household_id;
    std::size_t segment_index = 0;
    Timestamp period_start_utc{};
    Timestamp period_end_utc{};
    std::optional<SpeedTier> speed_tier;
    TierSource tier_source = TierSource::inferred;
};

struct VantageSegment {
    VantagePoint vantage;
    std::vector<CoincidentWindow> windows;
};

// "<household>/<segment>"
std::string make_vantage_id(const std::string& household_id, std::size_t segment_index);

// Cuts a household's windows at the given instants. The household period runs
// from its first window start to the end of its last window; k splits yield
// k + 1 contiguous, disjoint segments covering it. Throws InvalidArgument when
// a split is not strictly inside the period or splits are not increasing.
std::vector<VantageSegment> split_household(const std::string& household_id,
                                            std::span<const CoincidentWindow> windows,
                                            std::span<const Timestamp> split_instants,
                                            std::int64_t window_seconds = kDefaultWindowSeconds);

}  // namespace homethru::analysis
