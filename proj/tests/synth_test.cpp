#include <doctest.h>

#include <algorithm>
#include <map>

#include "homethru/analysis/cohort.hpp"
#include "homethru/errors.hpp"
#include "homethru/synth/cohort_generator.hpp"

using namespace homethru;
using namespace homethru::analysis;
using namespace homethru::synth;

namespace {

std::map<std::string, std::vector<ThroughputSample>> by_household(const std::vector<ThroughputSample>& samples) {
    std::map<std::string, std::vector<ThroughputSample>> out;
    for (const auto& s : samples) out[s.household_id].push_back(s);
    return out;
}

}  // namespace

TEST_CASE("generation is deterministic for a seed") {
    const auto spec = default_cohort_spec(6, 2);
    const auto a = generate_cohort(spec, 1);
    const auto b = generate_cohort(spec, 1);
    const auto c = generate_cohort(spec, 2);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    for (const auto& s : a) CHECK_NOTHROW(validate(s));
    CHECK(std::is_sorted(a.begin(), a.end(),
                         [](const auto& x, const auto& y) { return x.timestamp_utc < y.timestamp_utc; }));
}

TEST_CASE("hourly access tests and non-overlapping wifi tests") {
    auto spec = default_cohort_spec(3, 0);
    spec.days = 3;
    const auto samples = generate_cohort(spec, 9);
    for (const auto& [hh, list] : by_household(samples)) {
        std::size_t access = 0;
        for (std::size_t i = 0; i < list.size(); ++i) {
            access += list[i].path == MeasurementPath::wan_access ? 1 : 0;
            if (i > 0) {
                const auto prev_end =
                    list[i - 1].timestamp_utc + std::chrono::milliseconds(std::llround(list[i - 1].duration_seconds * 1000));
                CHECK(list[i].timestamp_utc >= prev_end);
            }
        }
        CHECK(access == 72);
    }
}

TEST_CASE("default cohort splits 52 households into 65 vantage points") {
    const auto spec = default_cohort_spec();
    REQUIRE(spec.households.size() == 52);
    const auto samples = generate_cohort(spec, 1);
    const auto analysis = analyze_cohort(samples);
    const auto& report = analysis.report;
    CHECK(report.households_total == 52);
    CHECK(report.households_retained == 52);
    CHECK(report.households_split == 13);
    CHECK(report.vantage_points_retained == 65);

    const std::map<SpeedTier, std::size_t> expected = {
        {SpeedTier::below_50, 3},     {SpeedTier::mbps_50_100, 15}, {SpeedTier::mbps_100_200, 3},
        {SpeedTier::mbps_200_400, 10}, {SpeedTier::mbps_400_800, 21}, {SpeedTier::above_800, 13}};
    for (const auto& tc : report.tier_counts) CHECK(tc.vantage_count == expected.at(tc.tier));

    // Each split lands on the first coincident window at or after the plan change.
    const auto change_at = spec.start_utc + std::chrono::days(spec.days / 2);
    const auto households = by_household(samples);
    std::size_t second_segments = 0;
    for (const auto& vp : analysis.vantage_points) {
        if (vp.segment.vantage.segment_index != 1) continue;
        ++second_segments;
        const auto windows = resample_windows(households.at(vp.segment.vantage.household_id));
        const auto first_after = std::find_if(windows.begin(), windows.end(),
                                              [&](const auto& w) { return w.window_start_utc >= change_at; });
        REQUIRE(first_after != windows.end());
        CHECK(vp.segment.vantage.period_start_utc == first_after->window_start_utc);
    }
    CHECK(second_segments == 13);

    // Window multiset is unchanged by splitting.
    for (const auto& [hh, list] : households) {
        std::vector<CoincidentWindow> rejoined;
        for (const auto& vp : analysis.vantage_points)
            if (vp.segment.vantage.household_id == hh)
                rejoined.insert(rejoined.end(), vp.segment.windows.begin(), vp.segment.windows.end());
        CHECK(rejoined == resample_windows(list));
    }
}

TEST_CASE("wifi capped below fast plans forces bottlenecks") {
    CohortSpec spec;
    spec.days = 14;
    for (int i = 0; i < 8; ++i) {
        HouseholdSpec h;
        h.household_id = "h" + std::to_string(i);
        h.access_mbps = i % 2 == 0 ? 35.0 : 900.0;
        spec.households.push_back(h);
    }
    HouseholdSpec capped;
    capped.household_id = "capped";
    capped.access_mbps = 950.0;
    capped.wifi_capacity_mbps = 200.0;
    spec.households.push_back(capped);

    const auto analysis = analyze_cohort(generate_cohort(spec, 4));
    REQUIRE(analysis.vantage_points.size() == 9);
    for (const auto& vp : analysis.vantage_points) {
        if (vp.stats.tier == SpeedTier::above_800) CHECK(vp.stats.prevalence == 1.0);
        if (vp.stats.tier == SpeedTier::below_50) CHECK(vp.stats.prevalence == 0.0);
    }
}

TEST_CASE("spec JSON") {
    const auto spec = default_cohort_spec(10, 3);
    const auto round_trip = cohort_spec_from_json(nlohmann::json::parse(to_json(spec).dump()));
    CHECK(to_json(round_trip) == to_json(spec));
    CHECK(generate_cohort(round_trip, 5) == generate_cohort(spec, 5));

    const auto shorthand = cohort_spec_from_json(nlohmann::json::parse(R"({"households": {"count": 4, "plan_changes": 1}, "days": 10})"));
    CHECK(shorthand.households.size() == 4);
    CHECK(shorthand.days == 10);

    const auto tiers = cohort_spec_from_json(nlohmann::json::parse(
        R"({"households": [{"id": "a", "access_tier": ">800", "access_after_tier": "<50", "wifi_capacity_mbps": 200}]})"));
    CHECK(tiers.households[0].access_mbps == 950.0);
    CHECK(tiers.households[0].access_after_mbps == 35.0);
    CHECK(tiers.households[0].wifi_capacity_mbps == 200.0);
    CHECK(tier_metadata(tiers) == nlohmann::ordered_json::parse(R"({"a/0": ">800", "a/1": "<50"})"));

    const char* invalid[] = {
        R"([])",
        R"({"days": 0})",
        R"({"households": []})",
        R"({"households": [{"id": "a"}]})",
        R"({"households": [{"id": "a", "access_mbps": -1}]})",
        R"({"households": [{"id": "a", "access_mbps": 5}, {"id": "a", "access_mbps": 5}]})",
        R"({"households": {"count": 2, "plan_changes": 3}})",
        R"({"wifi_capacity_mbps": [400, 80]})",
        R"({"wifi_probability_day": 2})",
        R"({"days": "many"})",
        R"({"start_utc": "yesterday"})",
    };
    for (const char* text : invalid) {
        CAPTURE(text);
        CHECK_THROWS_AS(cohort_spec_from_json(nlohmann::json::parse(text)), InvalidArgument);
    }
}
