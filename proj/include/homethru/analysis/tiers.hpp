#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "homethru/analysis/windows.hpp"

namespace homethru::analysis {

// Access-plan speed tiers. Bins are lower-inclusive, upper-exclusive and
// partition (0, inf) Mbps.
enum class SpeedTier {
    below_50,     // [0, 50)
    mbps_50_100,  // [50, 100)
    mbps_100_200,
    mbps_200_400,
    mbps_400_800,
    above_800,    // [800, inf)
};

inline constexpr std::array kAllTiers = {SpeedTier::below_50,     SpeedTier::mbps_50_100, SpeedTier::mbps_100_200,
                                         SpeedTier::mbps_200_400, SpeedTier::mbps_400_800, SpeedTier::above_800};

enum class TierSource { metadata, inferred };

// "<50", "50-100", ..., ">800"
std::string_view tier_label(SpeedTier tier);
// File-name safe: "lt50", "50-100", ..., "gt800"
std::string_view tier_slug(SpeedTier tier);
std::string_view to_string(TierSource source);

// Accepts a label or slug; throws InvalidArgument.
SpeedTier parse_speed_tier(std::string_view text);

double tier_lower_bound_mbps(SpeedTier tier);

// Throws InvalidArgument for nonpositive or non-finite speeds.
SpeedTier tier_for_speed(double mbps);

// Percentile of window access medians used when no plan metadata exists.
inline constexpr double kTierInferencePercentile = 0.95;

struct TierAssignment {
    SpeedTier tier = SpeedTier::below_50;
    TierSource source = TierSource::inferred;
};

// Metadata wins when present; otherwise the 95th (nearest-rank) percentile of
// the windows' access medians is binned. Throws InsufficientData when neither
// is available.
TierAssignment assign_speed_tier(std::optional<SpeedTier> metadata_tier, std::span<const CoincidentWindow> windows);

}  // namespace homethru::analysis
