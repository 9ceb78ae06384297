#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "homethru/analysis/cohort.hpp"

namespace homethru::analysis {

nlohmann::ordered_json window_to_json(const CoincidentWindow& window);
nlohmann::ordered_json vantage_stats_to_json(const VantageStats& stats);
nlohmann::ordered_json tier_summary_to_json(const TierSummary& summary);

// Full report, including the parameters that produced it.
nlohmann::ordered_json report_to_json(const CohortReport& report, const AnalysisOptions& options);

// Plain-text summary table followed by prevalence and per-tier sections.
std::string report_to_text(const CohortReport& report, const AnalysisOptions& options);

// "value,cumulative_fraction" header plus one row per point.
std::string cdf_to_csv(std::span<const CdfPoint> points);

std::string vantage_stats_to_csv(std::span<const VantageStats> stats);

// Every artifact `analyze` writes, as (file name, content), in a fixed order:
// report.json, report.txt, vantage_stats.csv, cdf_prevalence.csv,
// cdf_prevalence_<tier slug>.csv for all six tiers, cdf_sample_error.csv.
std::vector<std::pair<std::string, std::string>> report_artifacts(const CohortReport& report,
                                                                  const AnalysisOptions& options);

// Writes report_artifacts() into `directory` all-or-nothing.
std::vector<std::filesystem::path> write_report_files(const std::filesystem::path& directory,
                                                      const CohortReport& report, const AnalysisOptions& options);

}  // namespace homethru::analysis
