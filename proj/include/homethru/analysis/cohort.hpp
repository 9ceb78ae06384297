#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homethru/analysis/segmentation.hpp"
#include "homethru/analysis/statistics.hpp"
#include "homethru/analysis/tiers.hpp"

namespace homethru::analysis {

// Minimum coincident windows for a vantage point to be analyzed.
inline constexpr std::size_t kDefaultMinWindows = 20;

enum class PrevalenceClass { rare, mixed, frequent };
std::string_view to_string(PrevalenceClass c);

struct PrevalenceThresholds {
    double rare_max = 0.1;
    double frequent_min = 0.8;
};

// rare if p <= rare_max, frequent if p >= frequent_min, mixed otherwise.
// Throws InvalidArgument for p outside [0, 1].
PrevalenceClass classify_prevalence(double p, const PrevalenceThresholds& thresholds = {});

struct VantageStats {
    std::string vantage_id;
    std::string household_id;
    std::size_t segment_index = 0;
    Timestamp period_start_utc{};
    Timestamp period_end_utc{};
    SpeedTier tier = SpeedTier::below_50;
    TierSource tier_source = TierSource::inferred;
    std::size_t window_count = 0;
    std::size_t bottleneck_windows = 0;
    double prevalence = 0.0;
    // Medians over the vantage point's window medians.
    double median_wifi_mbps = 0.0;
    double median_access_mbps = 0.0;
    double effective_throughput_mbps = 0.0;
    double gap_mbps = 0.0;
    // Absent with fewer than two windows.
    std::optional<double> diff_sample_error_mbps;
    PrevalenceClass prevalence_class = PrevalenceClass::rare;
};

// Throws InsufficientData for a segment without windows.
VantageStats compute_vantage_stats(const VantageSegment& segment, const TierAssignment& tier,
                                   const PrevalenceThresholds& thresholds = {});

// Keeps segments with at least min_windows coincident windows, in order.
std::vector<VantageSegment> filter_vantage_points(std::vector<VantageSegment> candidates,
                                                  std::size_t min_windows = kDefaultMinWindows);

struct TierSummary {
    SpeedTier tier = SpeedTier::below_50;
    std::size_t vantage_count = 0;
    double mean_access_mbps = 0.0;
    double mean_effective_mbps = 0.0;
    double mean_gap_mbps = 0.0;
    double median_access_mbps = 0.0;
    double median_effective_mbps = 0.0;
    double median_gap_mbps = 0.0;
};

// One summary per nonempty tier, ordered by tier lower bound.
std::vector<TierSummary> tier_summary(std::span<const VantageStats> stats);

struct TierCount {
    SpeedTier tier;
    std::size_t vantage_count;
};

// Aggregates over analyzed vantage points. The input counters (households,
// measurements) are filled by analyze_cohort; cohort_report() alone leaves them 0.
struct CohortReport {
    std::optional<Timestamp> period_start_utc;
    std::optional<Timestamp> period_end_utc;
    std::size_t households_total = 0;
    std::size_t households_retained = 0;
    std::size_t households_split = 0;
    std::size_t vantage_points_total = 0;
    std::size_t measurements_total = 0;
    std::size_t wifi_measurements = 0;
    std::size_t access_measurements = 0;

    std::size_t vantage_points_retained = 0;
    std::size_t coincident_windows = 0;
    std::vector<TierCount> tier_counts;  // every tier, zero counts included
    double at_least_one_bottleneck_fraction = 0.0;
    std::size_t rare_count = 0;
    std::size_t mixed_count = 0;
    std::size_t frequent_count = 0;
    std::optional<double> median_access_frequent_mbps;
    std::optional<double> median_access_rare_mbps;
    std::vector<TierSummary> tiers;
    std::vector<VantageStats> vantage_points;
    std::vector<CdfPoint> prevalence_cdf;
    std::map<SpeedTier, std::vector<CdfPoint>> tier_prevalence_cdfs;
    std::vector<CdfPoint> sample_error_cdf;
};

// Throws InsufficientData when stats is empty.
CohortReport cohort_report(std::span<const VantageStats> stats);

// Plan tiers keyed by vantage id or household id (vantage id wins).
using TierMetadata = std::map<std::string, SpeedTier>;

struct AnalysisOptions {
    std::int64_t window_seconds = kDefaultWindowSeconds;
    std::size_t min_windows = kDefaultMinWindows;
    ChangeDetectionOptions change;
    PrevalenceThresholds thresholds;
    TierMetadata tier_metadata;
};

// Throws InvalidArgument for a nonpositive window or cutoff, a change ratio at
// or below 1, empty spans, or class thresholds outside 0 <= rare < frequent <= 1.
void validate(const AnalysisOptions& options);

struct VantageAnalysis {
    VantageSegment segment;
    VantageStats stats;
};

struct CohortAnalysis {
    std::vector<VantageAnalysis> vantage_points;  // retained only
    CohortReport report;
};

// Full pipeline: per household (in id order) resample, detect plan changes,
// split, drop vantage points under min_windows, assign tiers, and aggregate.
// Throws InsufficientData when no vantage point survives the filter.
CohortAnalysis analyze_cohort(std::span<const ThroughputSample> samples, const AnalysisOptions& options = {});

// Same pipeline without the final aggregation; never throws InsufficientData.
std::vector<VantageAnalysis> analyze_vantage_points(std::span<const ThroughputSample> samples,
                                                    const AnalysisOptions& options = {});

}  // namespace homethru::analysis
