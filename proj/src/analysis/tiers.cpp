#include "homethru/analysis/tiers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "homethru/analysis/statistics.hpp"
#include "homethru/errors.hpp"

namespace homethru::analysis {

namespace {

struct TierInfo {
    SpeedTier tier;
    std::string_view label;
    std::string_view slug;
    double lower;
};

constexpr std::array<TierInfo, 6> kTierTable = {{
    {SpeedTier::below_50, "<50", "lt50", 0.0},
    {SpeedTier::mbps_50_100, "50-100", "50-100", 50.0},
    {SpeedTier::mbps_100_200, "100-200", "100-200", 100.0},
    {SpeedTier::mbps_200_400, "200-400", "200-400", 200.0},
    {SpeedTier::mbps_400_800, "400-800", "400-800", 400.0},
    {SpeedTier::above_800, ">800", "gt800", 800.0},
}};

const TierInfo& info(SpeedTier tier) { return kTierTable[static_cast<std::size_t>(tier)]; }

}  // namespace

std::string_view tier_label(SpeedTier tier) { return info(tier).label; }
std::string_view tier_slug(SpeedTier tier) { return info(tier).slug; }
double tier_lower_bound_mbps(SpeedTier tier) { return info(tier).lower; }

std::string_view to_string(TierSource source) {
    return source == TierSource::metadata ? "metadata" : "inferred";
}

SpeedTier parse_speed_tier(std::string_view text) {
    for (const auto& entry : kTierTable)
        if (text == entry.label || text == entry.slug) return entry.tier;
    throw InvalidArgument(fmt::format("unknown speed tier '{}'", text));
}

SpeedTier tier_for_speed(double mbps) {
    if (!(mbps > 0.0) || !std::isfinite(mbps))
        throw InvalidArgument(fmt::format("speed {} Mbps has no tier", mbps));
    for (auto it = kTierTable.rbegin(); it != kTierTable.rend(); ++it)
        if (mbps >= it->lower) return it->tier;
    return SpeedTier::below_50;
}

TierAssignment assign_speed_tier(std::optional<SpeedTier> metadata_tier, std::span<const CoincidentWindow> windows) {
    if (metadata_tier) return {*metadata_tier, TierSource::metadata};
    if (windows.empty()) throw InsufficientData("no tier metadata and no access measurements to infer a tier from");
    std::vector<double> access;
    access.reserve(windows.size());
    for (const auto& w : windows) access.push_back(w.median_access_mbps);
    return {tier_for_speed(nearest_rank_percentile(std::move(access), kTierInferencePercentile)), TierSource::inferred};
}

}  // namespace homethru::analysis
