#include "homethru/analysis/cohort.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru::analysis {

std::string_view to_string(PrevalenceClass c) {
    switch (c) {
        case PrevalenceClass::rare:
            return "rare";
        case PrevalenceClass::mixed:
            return "mixed";
        case PrevalenceClass::frequent:
            return "frequent";
    }
    return "unknown";
}

PrevalenceClass classify_prevalence(double p, const PrevalenceThresholds& thresholds) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(fmt::format("prevalence {} outside [0, 1]", p));
    if (p <= thresholds.rare_max) return PrevalenceClass::rare;
    if (p >= thresholds.frequent_min) return PrevalenceClass::frequent;
    return PrevalenceClass::mixed;
}

VantageStats compute_vantage_stats(const VantageSegment& segment, const TierAssignment& tier,
                                   const PrevalenceThresholds& thresholds) {
    const auto& windows = segment.windows;
    if (windows.empty())
        throw InsufficientData(fmt::format("vantage point {} has no coincident windows", segment.vantage.vantage_id));

    VantageStats s;
    s.vantage_id = segment.vantage.vantage_id;
    s.household_id = segment.vantage.household_id;
    s.segment_index = segment.vantage.segment_index;
    s.period_start_utc = segment.vantage.period_start_utc;
    s.period_end_utc = segment.vantage.period_end_utc;
    s.tier = tier.tier;
    s.tier_source = tier.source;
    s.window_count = windows.size();
    s.bottleneck_windows = static_cast<std::size_t>(
        std::count_if(windows.begin(), windows.end(), [](const auto& w) { return w.is_bottleneck; }));
    s.prevalence = bottleneck_prevalence(windows);

    std::vector<double> wifi;
    std::vector<double> access;
    for (const auto& w : windows) {
        wifi.push_back(w.median_wifi_mbps);
        access.push_back(w.median_access_mbps);
    }
    s.median_wifi_mbps = median(std::move(wifi));
    s.median_access_mbps = median(std::move(access));
    s.effective_throughput_mbps = effective_throughput(s.median_wifi_mbps, s.median_access_mbps);
    s.gap_mbps = s.median_access_mbps - s.effective_throughput_mbps;
    if (windows.size() >= 2) s.diff_sample_error_mbps = sample_error_of_difference(windows);
    s.prevalence_class = classify_prevalence(s.prevalence, thresholds);
    return s;
}

std::vector<VantageSegment> filter_vantage_points(std::vector<VantageSegment> candidates, std::size_t min_windows) {
    std::erase_if(candidates, [&](const VantageSegment& c) { return c.windows.size() < min_windows; });
    return candidates;
}

std::vector<TierSummary> tier_summary(std::span<const VantageStats> stats) {
    std::vector<TierSummary> out;
    for (const auto tier : kAllTiers) {
        std::vector<double> access;
        std::vector<double> effective;
        std::vector<double> gap;
        for (const auto& s : stats) {
            if (s.tier != tier) continue;
            access.push_back(s.median_access_mbps);
            effective.push_back(s.effective_throughput_mbps);
            gap.push_back(s.gap_mbps);
        }
        if (access.empty()) continue;

        const auto mean = [](const std::vector<double>& v) {
            double total = 0.0;
            for (const double x : v) total += x;
            return total / static_cast<double>(v.size());
        };
        TierSummary t;
        t.tier = tier;
        t.vantage_count = access.size();
        t.mean_access_mbps = mean(access);
        t.mean_effective_mbps = mean(effective);
        t.mean_gap_mbps = mean(gap);
        t.median_access_mbps = median(std::move(access));
        t.median_effective_mbps = median(std::move(effective));
        t.median_gap_mbps = median(std::move(gap));
        out.push_back(t);
    }
    return out;
}

CohortReport cohort_report(std::span<const VantageStats> stats) {
    if (stats.empty()) throw InsufficientData("insufficient data: no vantage points to report on");

    CohortReport r;
    r.vantage_points.assign(stats.begin(), stats.end());
    r.vantage_points_retained = stats.size();

    std::vector<double> prevalence;
    std::vector<double> sample_errors;
    std::vector<double> frequent_access;
    std::vector<double> rare_access;
    std::map<SpeedTier, std::vector<double>> by_tier;
    std::size_t with_bottleneck = 0;
    for (const auto& s : stats) {
        r.coincident_windows += s.window_count;
        prevalence.push_back(s.prevalence);
        by_tier[s.tier].push_back(s.prevalence);
        if (s.diff_sample_error_mbps) sample_errors.push_back(*s.diff_sample_error_mbps);
        if (s.bottleneck_windows > 0) ++with_bottleneck;
        switch (s.prevalence_class) {
            case PrevalenceClass::rare:
                ++r.rare_count;
                rare_access.push_back(s.median_access_mbps);
                break;
            case PrevalenceClass::mixed:
                ++r.mixed_count;
                break;
            case PrevalenceClass::frequent:
                ++r.frequent_count;
                frequent_access.push_back(s.median_access_mbps);
                break;
        }
    }

    for (const auto tier : kAllTiers) {
        const auto it = by_tier.find(tier);
        r.tier_counts.push_back({tier, it == by_tier.end() ? 0 : it->second.size()});
        if (it != by_tier.end()) r.tier_prevalence_cdfs[tier] = prevalence_cdf(it->second);
    }
    r.at_least_one_bottleneck_fraction = static_cast<double>(with_bottleneck) / static_cast<double>(stats.size());
    if (!frequent_access.empty()) r.median_access_frequent_mbps = median(std::move(frequent_access));
    if (!rare_access.empty()) r.median_access_rare_mbps = median(std::move(rare_access));
    r.tiers = tier_summary(stats);
    r.prevalence_cdf = prevalence_cdf(prevalence);
    if (!sample_errors.empty()) r.sample_error_cdf = prevalence_cdf(sample_errors);
    return r;
}

namespace {

struct PipelineCounts {
    std::size_t households = 0;
    std::size_t households_retained = 0;
    std::size_t households_split = 0;
    std::size_t vantage_points = 0;
};

}  // namespace

void validate(const AnalysisOptions& options) {
    if (options.window_seconds <= 0) throw InvalidArgument("window length must be positive");
    if (options.min_windows == 0) throw InvalidArgument("min_windows must be at least 1");
    if (!(options.change.ratio_threshold > 1.0)) throw InvalidArgument("change ratio threshold must exceed 1");
    if (options.change.span_windows == 0 || options.change.sustain_windows == 0)
        throw InvalidArgument("change detection spans must be positive");
    const auto& t = options.thresholds;
    if (!(t.rare_max >= 0.0 && t.rare_max < t.frequent_min && t.frequent_min <= 1.0))
        throw InvalidArgument(fmt::format("class thresholds must satisfy 0 <= rare_max < frequent_min <= 1 (got {} and {})",
                                          t.rare_max, t.frequent_min));
}

namespace {

std::optional<SpeedTier> lookup_tier(const TierMetadata& metadata, const VantagePoint& vp) {
    if (const auto it = metadata.find(vp.vantage_id); it != metadata.end()) return it->second;
    if (const auto it = metadata.find(vp.household_id); it != metadata.end()) return it->second;
    return std::nullopt;
}

std::vector<VantageAnalysis> run_pipeline(std::span<const ThroughputSample> samples, const AnalysisOptions& options,
                                          PipelineCounts& counts) {
    validate(options);

    std::map<std::string, std::vector<ThroughputSample>> households;
    for (const auto& sample : samples) households[sample.household_id].push_back(sample);
    counts.households = households.size();

    std::vector<VantageAnalysis> retained;
    for (const auto& [household_id, household_samples] : households) {
        const auto windows = resample_windows(household_samples, options.window_seconds);
        const auto splits = detect_access_change(windows, options.change);
        if (!splits.empty()) ++counts.households_split;

        auto segments = split_household(household_id, windows, splits, options.window_seconds);
        counts.vantage_points += segments.size();
        segments = filter_vantage_points(std::move(segments), options.min_windows);
        if (!segments.empty()) ++counts.households_retained;

        for (auto& segment : segments) {
            const auto tier = assign_speed_tier(lookup_tier(options.tier_metadata, segment.vantage), segment.windows);
            segment.vantage.speed_tier = tier.tier;
            segment.vantage.tier_source = tier.source;
            auto stats = compute_vantage_stats(segment, tier, options.thresholds);
            retained.push_back({std::move(segment), std::move(stats)});
        }
    }
    return retained;
}

}  // namespace

std::vector<VantageAnalysis> analyze_vantage_points(std::span<const ThroughputSample> samples,
                                                    const AnalysisOptions& options) {
    PipelineCounts counts;
    return run_pipeline(samples, options, counts);
}

CohortAnalysis analyze_cohort(std::span<const ThroughputSample> samples, const AnalysisOptions& options) {
    PipelineCounts counts;
    CohortAnalysis result;
    result.vantage_points = run_pipeline(samples, options, counts);
    if (result.vantage_points.empty())
        throw InsufficientData(fmt::format("insufficient data: no vantage point has {} or more coincident windows",
                                           options.min_windows));

    std::vector<VantageStats> stats;
    stats.reserve(result.vantage_points.size());
    for (const auto& vp : result.vantage_points) stats.push_back(vp.stats);
    auto& report = result.report;
    report = cohort_report(stats);

    report.households_total = counts.households;
    report.households_retained = counts.households_retained;
    report.households_split = counts.households_split;
    report.vantage_points_total = counts.vantage_points;
    report.measurements_total = samples.size();
    for (const auto& s : samples) {
        (s.path == MeasurementPath::lan_wifi ? report.wifi_measurements : report.access_measurements) += 1;
        if (!report.period_start_utc || s.timestamp_utc < *report.period_start_utc)
            report.period_start_utc = s.timestamp_utc;
        if (!report.period_end_utc || s.timestamp_utc > *report.period_end_utc) report.period_end_utc = s.timestamp_utc;
    }
    return result;
}

}  // namespace homethru::analysis
