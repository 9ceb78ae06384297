#include "homethru/analysis/report.hpp"

#include <fmt/format.h>

#include "homethru/fileio.hpp"

namespace homethru::analysis {

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& value) {
    return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

std::string optional_timestamp(const std::optional<Timestamp>& t) { return t ? format_rfc3339(*t) : ""; }

std::string date_only(const std::optional<Timestamp>& t) { return t ? format_rfc3339(*t).substr(0, 10) : "n/a"; }

// 13581 -> "13,581"
std::string grouped(std::size_t n) {
    std::string digits = std::to_string(n);
    for (auto i = static_cast<std::ptrdiff_t>(digits.size()) - 3; i > 0; i -= 3)
        digits.insert(static_cast<std::size_t>(i), ",");
    return digits;
}

std::string csv_text(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (const char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

nlohmann::ordered_json parameters_json(const AnalysisOptions& options) {
    nlohmann::ordered_json j;
    j["window_seconds"] = options.window_seconds;
    j["min_windows"] = options.min_windows;
    j["change_ratio_threshold"] = options.change.ratio_threshold;
    j["change_span_windows"] = options.change.span_windows;
    j["change_sustain_windows"] = options.change.sustain_windows;
    j["rare_max"] = options.thresholds.rare_max;
    j["frequent_min"] = options.thresholds.frequent_min;
    return j;
}

nlohmann::ordered_json cdf_json(std::span<const CdfPoint> points) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& p : points) out.push_back({p.value, p.cumulative_fraction});
    return out;
}

}  // namespace

nlohmann::ordered_json window_to_json(const CoincidentWindow& w) {
    nlohmann::ordered_json j;
    j["window_start_utc"] = format_rfc3339(w.window_start_utc);
    j["household_id"] = w.household_id;
    j["median_wifi_mbps"] = w.median_wifi_mbps;
    j["median_access_mbps"] = w.median_access_mbps;
    j["wifi_sample_count"] = w.wifi_sample_count;
    j["access_sample_count"] = w.access_sample_count;
    j["is_bottleneck"] = w.is_bottleneck;
    return j;
}

nlohmann::ordered_json vantage_stats_to_json(const VantageStats& s) {
    nlohmann::ordered_json j;
    j["vantage_id"] = s.vantage_id;
    j["household_id"] = s.household_id;
    j["segment_index"] = s.segment_index;
    j["period_start_utc"] = format_rfc3339(s.period_start_utc);
    j["period_end_utc"] = format_rfc3339(s.period_end_utc);
    j["speed_tier"] = tier_label(s.tier);
    j["tier_source"] = to_string(s.tier_source);
    j["window_count"] = s.window_count;
    j["bottleneck_windows"] = s.bottleneck_windows;
    j["prevalence"] = s.prevalence;
    j["class"] = to_string(s.prevalence_class);
    j["median_wifi_mbps"] = s.median_wifi_mbps;
    j["median_access_mbps"] = s.median_access_mbps;
    j["effective_throughput_mbps"] = s.effective_throughput_mbps;
    j["gap_mbps"] = s.gap_mbps;
    j["diff_sample_error_mbps"] = optional_number(s.diff_sample_error_mbps);
    return j;
}

nlohmann::ordered_json tier_summary_to_json(const TierSummary& t) {
    nlohmann::ordered_json j;
    j["tier"] = tier_label(t.tier);
    j["vantage_count"] = t.vantage_count;
    j["mean_access_mbps"] = t.mean_access_mbps;
    j["mean_effective_mbps"] = t.mean_effective_mbps;
    j["mean_gap_mbps"] = t.mean_gap_mbps;
    j["median_access_mbps"] = t.median_access_mbps;
    j["median_effective_mbps"] = t.median_effective_mbps;
    j["median_gap_mbps"] = t.median_gap_mbps;
    return j;
}

nlohmann::ordered_json report_to_json(const CohortReport& r, const AnalysisOptions& options) {
    nlohmann::ordered_json j;
    j["parameters"] = parameters_json(options);
    j["period"] = {{"start_utc", optional_timestamp(r.period_start_utc)},
                   {"end_utc", optional_timestamp(r.period_end_utc)}};
    j["households"] = {{"total", r.households_total},
                       {"retained", r.households_retained},
                       {"with_plan_change", r.households_split}};

    nlohmann::ordered_json by_tier;
    for (const auto& tc : r.tier_counts) by_tier[std::string(tier_label(tc.tier))] = tc.vantage_count;
    j["vantage_points"] = {{"candidates", r.vantage_points_total},
                           {"retained", r.vantage_points_retained},
                           {"by_tier", by_tier}};
    j["measurements"] = {{"total", r.measurements_total},
                         {"lan_wifi", r.wifi_measurements},
                         {"wan_access", r.access_measurements}};
    j["coincident_windows"] = r.coincident_windows;

    nlohmann::ordered_json prevalence;
    prevalence["at_least_one_bottleneck_fraction"] = r.at_least_one_bottleneck_fraction;
    prevalence["classes"] = {{"rare", r.rare_count}, {"mixed", r.mixed_count}, {"frequent", r.frequent_count}};
    prevalence["median_access_mbps"] = {{"frequent", optional_number(r.median_access_frequent_mbps)},
                                        {"rare", optional_number(r.median_access_rare_mbps)}};
    prevalence["cdf"] = cdf_json(r.prevalence_cdf);
    nlohmann::ordered_json tier_cdfs = nlohmann::ordered_json::object();
    for (const auto& [tier, points] : r.tier_prevalence_cdfs) tier_cdfs[std::string(tier_label(tier))] = cdf_json(points);
    prevalence["cdf_by_tier"] = tier_cdfs;
    j["prevalence"] = prevalence;

    j["sample_error_cdf"] = cdf_json(r.sample_error_cdf);
    auto tiers = nlohmann::ordered_json::array();
    for (const auto& t : r.tiers) tiers.push_back(tier_summary_to_json(t));
    j["tiers"] = tiers;
    auto vantage = nlohmann::ordered_json::array();
    for (const auto& s : r.vantage_points) vantage.push_back(vantage_stats_to_json(s));
    j["vantage_stats"] = vantage;
    return j;
}

std::string report_to_text(const CohortReport& r, const AnalysisOptions& options) {
    constexpr int width = 46;
    const std::string rule(width, '-');
    const auto row = [&](std::string_view label, const std::string& value) {
        return fmt::format("{:<{}}{:>{}}\n", label, 20, value, width - 20);
    };

    std::string out;
    out += "Data summary\n" + rule + "\n";
    out += row("Period", fmt::format("{} - {}", date_only(r.period_start_utc), date_only(r.period_end_utc)));
    out += row("Households", grouped(r.households_retained));
    out += rule + "\n";
    out += row("Vantage Points", grouped(r.vantage_points_retained));
    for (const auto& tc : r.tier_counts) {
        const std::string label =
            tc.tier == SpeedTier::above_800 ? "> 800 Mbps" : std::string(tier_label(tc.tier));
        out += row(fmt::format("  - {}", label), grouped(tc.vantage_count));
    }
    out += rule + "\n";
    out += row("Measurements", grouped(r.measurements_total));
    out += rule + "\n\n";

    out += "Bottleneck prevalence\n";
    out += fmt::format("  at least one bottleneck: {:.2f}% of vantage points\n",
                       100.0 * r.at_least_one_bottleneck_fraction);
    out += fmt::format("  rare (p <= {:.2f}): {}\n", options.thresholds.rare_max, r.rare_count);
    out += fmt::format("  mixed: {}\n", r.mixed_count);
    out += fmt::format("  frequent (p >= {:.2f}): {}\n", options.thresholds.frequent_min, r.frequent_count);
    const auto mbps = [](const std::optional<double>& v) { return v ? fmt::format("{:.2f} Mbps", *v) : "n/a"; };
    out += fmt::format("  median access, frequent: {}\n", mbps(r.median_access_frequent_mbps));
    out += fmt::format("  median access, rare: {}\n\n", mbps(r.median_access_rare_mbps));

    out += "Throughput by speed tier (Mbps)\n";
    out += fmt::format("{:<9}{:>4}{:>12}{:>12}{:>10}{:>12}{:>12}{:>12}\n", "tier", "n", "mean_acc", "mean_eff",
                       "mean_gap", "median_acc", "median_eff", "median_gap");
    for (const auto& t : r.tiers)
        out += fmt::format("{:<9}{:>4}{:>12.2f}{:>12.2f}{:>10.2f}{:>12.2f}{:>12.2f}{:>12.2f}\n", tier_label(t.tier),
                           t.vantage_count, t.mean_access_mbps, t.mean_effective_mbps, t.mean_gap_mbps,
                           t.median_access_mbps, t.median_effective_mbps, t.median_gap_mbps);
    out += fmt::format("\nCoincident windows: {} ({} h each, vantage points need >= {})\n", grouped(r.coincident_windows),
                       options.window_seconds / 3600.0, options.min_windows);
    return out;
}

std::string cdf_to_csv(std::span<const CdfPoint> points) {
    std::string out = "value,cumulative_fraction\n";
    for (const auto& p : points) out += fmt::format("{},{}\n", p.value, p.cumulative_fraction);
    return out;
}

std::string vantage_stats_to_csv(std::span<const VantageStats> stats) {
    std::string out =
        "vantage_id,household_id,segment_index,period_start_utc,period_end_utc,speed_tier,tier_source,window_count,"
        "bottleneck_windows,prevalence,class,median_wifi_mbps,median_access_mbps,effective_throughput_mbps,gap_mbps,"
        "diff_sample_error_mbps\n";
    for (const auto& s : stats) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_text(s.vantage_id),
                           csv_text(s.household_id), s.segment_index, format_rfc3339(s.period_start_utc),
                           format_rfc3339(s.period_end_utc), tier_label(s.tier), to_string(s.tier_source),
                           s.window_count, s.bottleneck_windows, s.prevalence, to_string(s.prevalence_class),
                           s.median_wifi_mbps, s.median_access_mbps, s.effective_throughput_mbps, s.gap_mbps,
                           s.diff_sample_error_mbps ? fmt::format("{}", *s.diff_sample_error_mbps) : "");
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> report_artifacts(const CohortReport& report,
                                                                  const AnalysisOptions& options) {
    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("report.json", report_to_json(report, options).dump(2) + "\n");
    files.emplace_back("report.txt", report_to_text(report, options));
    files.emplace_back("vantage_stats.csv", vantage_stats_to_csv(report.vantage_points));
    files.emplace_back("cdf_prevalence.csv", cdf_to_csv(report.prevalence_cdf));
    for (const auto tier : kAllTiers) {
        const auto it = report.tier_prevalence_cdfs.find(tier);
        files.emplace_back(fmt::format("cdf_prevalence_{}.csv", tier_slug(tier)),
                           it == report.tier_prevalence_cdfs.end() ? cdf_to_csv({}) : cdf_to_csv(it->second));
    }
    files.emplace_back("cdf_sample_error.csv", cdf_to_csv(report.sample_error_cdf));
    return files;
}

std::vector<std::filesystem::path> write_report_files(const std::filesystem::path& directory,
                                                      const CohortReport& report, const AnalysisOptions& options) {
    const auto files = report_artifacts(report, options);
    write_files_atomic(directory, files);
    std::vector<std::filesystem::path> paths;
    for (const auto& [name, content] : files) paths.push_back(directory / name);
    return paths;
}

}  // namespace homethru::analysis
