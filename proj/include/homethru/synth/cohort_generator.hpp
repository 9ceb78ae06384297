#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "homethru/analysis/tiers.hpp"
#include "homethru/sample.hpp"

namespace homethru::synth {

struct Range {
    double min = 0.0;
    double max = 0.0;
};

struct HouseholdSpec {
    std::string household_id;
    double access_mbps = 0.0;
    // Plan speed after a change at the middle day boundary of the period.
    std::optional<double> access_after_mbps;
    // Fixed WiFi capacity; drawn from CohortSpec::wifi_capacity_mbps when absent.
    std::optional<double> wifi_capacity_mbps;
};

struct CohortSpec {
    Timestamp start_utc = parse_rfc3339("2021-09-18T00:00:00Z");
    int days = 40;
    // Per-household WiFi capacity, then a per-test factor applied to it.
    Range wifi_capacity_mbps{80.0, 400.0};
    Range wifi_test_factor{0.6, 1.0};
    // Per-test multiplier on the plan speed for access tests.
    Range access_noise{0.85, 1.05};
    // Chance of a WiFi test in each hour, by UTC hour of day.
    double wifi_probability_day = 0.3;
    double wifi_probability_night = 0.05;
    int day_start_hour_utc = 8;
    int day_end_hour_utc = 22;
    double test_duration_seconds = 10.0;
    std::vector<HouseholdSpec> households;
};

// Plan speed used for households of a tier.
double representative_speed_mbps(analysis::SpeedTier tier);

// `households` households of which `plan_changes` switch plans mid-period.
// The 52/13 default reproduces the per-tier vantage point counts
// 3, 15, 3, 10, 21, 13. Other sizes cycle through tiers.
CohortSpec default_cohort_spec(std::size_t households = 52, std::size_t plan_changes = 13);

// Throws InvalidArgument naming the offending field.
void validate(const CohortSpec& spec);

// JSON form. Households are either listed ("households": [{"id", "access_mbps"
// or "access_tier", optional "access_after_mbps"/"access_after_tier",
// optional "wifi_capacity_mbps"}]) or generated ("households": {"count",
// "plan_changes"}). Omitted fields keep their defaults.
CohortSpec cohort_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CohortSpec& spec);

// Deterministic for a given spec and seed; samples are ordered by time, then household.
std::vector<ThroughputSample> generate_cohort(const CohortSpec& spec, std::uint64_t seed);

// Plan tier per expected vantage point ("<household>/<segment>" -> tier label).
nlohmann::ordered_json tier_metadata(const CohortSpec& spec);

}  // namespace homethru::synth
