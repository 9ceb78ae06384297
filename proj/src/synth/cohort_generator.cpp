#include "homethru/synth/cohort_generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "homethru/analysis/segmentation.hpp"
#include "homethru/errors.hpp"

namespace homethru::synth {

using analysis::SpeedTier;

namespace {

// Uniform draws built from raw engine output, so sequences are identical
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(const Range& r) { return r.min + (r.max - r.min) * unit(); }
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(unit() * static_cast<double>(hi - lo + 1));
    }
    bool chance(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

struct ChangePair {
    SpeedTier before;
    SpeedTier after;
};

std::string household_name(std::size_t index) { return fmt::format("hh-{:03}", index + 1); }

Range range_from_json(const nlohmann::json& j, const char* key, Range fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
        throw InvalidArgument(fmt::format("cohort spec: '{}' must be a [min, max] pair", key));
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

double speed_from_json(const nlohmann::json& h, const char* mbps_key, const char* tier_key) {
    if (const auto it = h.find(mbps_key); it != h.end()) {
        if (!it->is_number()) throw InvalidArgument(fmt::format("cohort spec: '{}' must be a number", mbps_key));
        return it->get<double>();
    }
    if (const auto it = h.find(tier_key); it != h.end()) {
        if (!it->is_string()) throw InvalidArgument(fmt::format("cohort spec: '{}' must be a tier label", tier_key));
        return representative_speed_mbps(analysis::parse_speed_tier(it->get<std::string>()));
    }
    return std::nan("");
}

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidArgument(fmt::format("cohort spec: '{}' has the wrong type", key));
    }
}

void check_range(const Range& r, const char* name) {
    if (!(r.min > 0.0) || !(r.max >= r.min) || !std::isfinite(r.max))
        throw InvalidArgument(fmt::format("cohort spec: {} range [{}, {}] must be positive and ordered", name, r.min,
                                          r.max));
}

}  // namespace

double representative_speed_mbps(SpeedTier tier) {
    switch (tier) {
        case SpeedTier::below_50:
            return 35.0;
        case SpeedTier::mbps_50_100:
            return 75.0;
        case SpeedTier::mbps_100_200:
            return 150.0;
        case SpeedTier::mbps_200_400:
            return 300.0;
        case SpeedTier::mbps_400_800:
            return 600.0;
        case SpeedTier::above_800:
            return 950.0;
    }
    return 0.0;
}

CohortSpec default_cohort_spec(std::size_t households, std::size_t plan_changes) {
    if (households == 0) throw InvalidArgument("cohort spec: at least one household is required");
    if (plan_changes > households) throw InvalidArgument("cohort spec: more plan changes than households");

    using enum SpeedTier;
    std::vector<ChangePair> changes;
    std::vector<SpeedTier> singles;
    if (households == 52 && plan_changes == 13) {
        changes.insert(changes.end(), 5, {mbps_50_100, mbps_400_800});
        changes.insert(changes.end(), 4, {mbps_200_400, above_800});
        changes.push_back({below_50, mbps_100_200});
        changes.push_back({mbps_100_200, mbps_400_800});
        changes.insert(changes.end(), 2, {mbps_50_100, mbps_200_400});
        const std::array<std::pair<SpeedTier, int>, 6> single_counts = {
            {{below_50, 2}, {mbps_50_100, 8}, {mbps_100_200, 1}, {mbps_200_400, 4}, {mbps_400_800, 15}, {above_800, 9}}};
        for (const auto& [tier, count] : single_counts) singles.insert(singles.end(), count, tier);
    } else {
        const std::array<ChangePair, 5> cycle = {{{mbps_50_100, mbps_400_800},
                                                  {mbps_200_400, above_800},
                                                  {below_50, mbps_100_200},
                                                  {mbps_100_200, mbps_400_800},
                                                  {mbps_50_100, mbps_200_400}}};
        for (std::size_t i = 0; i < plan_changes; ++i) changes.push_back(cycle[i % cycle.size()]);
        for (std::size_t i = 0; i < households - plan_changes; ++i)
            singles.push_back(analysis::kAllTiers[i % analysis::kAllTiers.size()]);
    }

    CohortSpec spec;
    std::size_t index = 0;
    for (const auto& change : changes) {
        HouseholdSpec h;
        h.household_id = household_name(index++);
        h.access_mbps = representative_speed_mbps(change.before);
        h.access_after_mbps = representative_speed_mbps(change.after);
        spec.households.push_back(h);
    }
    for (const auto tier : singles) {
        HouseholdSpec h;
        h.household_id = household_name(index++);
        h.access_mbps = representative_speed_mbps(tier);
        spec.households.push_back(h);
    }
    return spec;
}

void validate(const CohortSpec& spec) {
    if (spec.days < 1) throw InvalidArgument("cohort spec: days must be at least 1");
    if (spec.households.empty()) throw InvalidArgument("cohort spec: no households");
    check_range(spec.wifi_capacity_mbps, "wifi_capacity_mbps");
    check_range(spec.wifi_test_factor, "wifi_test_factor");
    check_range(spec.access_noise, "access_noise");
    for (const double p : {spec.wifi_probability_day, spec.wifi_probability_night})
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("cohort spec: wifi test probabilities must lie in [0, 1]");
    if (spec.day_start_hour_utc < 0 || spec.day_end_hour_utc > 24 || spec.day_start_hour_utc > spec.day_end_hour_utc)
        throw InvalidArgument("cohort spec: day hours must satisfy 0 <= start <= end <= 24");
    if (!(spec.test_duration_seconds > 0.0) || spec.test_duration_seconds > 600.0)
        throw InvalidArgument("cohort spec: test_duration_seconds must lie in (0, 600]");

    std::set<std::string> ids;
    for (const auto& h : spec.households) {
        if (h.household_id.empty()) throw InvalidArgument("cohort spec: household id must not be empty");
        if (!ids.insert(h.household_id).second)
            throw InvalidArgument(fmt::format("cohort spec: duplicate household '{}'", h.household_id));
        const auto positive = [](std::optional<double> v) { return !v || (*v > 0.0 && std::isfinite(*v)); };
        if (!(h.access_mbps > 0.0) || !std::isfinite(h.access_mbps) || !positive(h.access_after_mbps) ||
            !positive(h.wifi_capacity_mbps))
            throw InvalidArgument(fmt::format("cohort spec: household '{}' needs positive speeds", h.household_id));
        if (h.access_after_mbps && spec.days < 2)
            throw InvalidArgument("cohort spec: plan changes need at least 2 days");
    }
}

CohortSpec cohort_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidArgument("cohort spec must be a JSON object");
    CohortSpec spec;
    const auto households = j.find("households");
    if (households == j.end() || households->is_object()) {
        const auto generated = households == j.end() ? nlohmann::json::object() : *households;
        spec = default_cohort_spec(value_or<std::size_t>(generated, "count", 52),
                                   value_or<std::size_t>(generated, "plan_changes", 13));
    } else if (households->is_array()) {
        for (const auto& h : *households) {
            if (!h.is_object()) throw InvalidArgument("cohort spec: each household must be an object");
            HouseholdSpec hs;
            hs.household_id = value_or<std::string>(h, "id", "");
            hs.access_mbps = speed_from_json(h, "access_mbps", "access_tier");
            if (std::isnan(hs.access_mbps))
                throw InvalidArgument(fmt::format("cohort spec: household '{}' needs access_mbps or access_tier",
                                                  hs.household_id));
            if (const double after = speed_from_json(h, "access_after_mbps", "access_after_tier"); !std::isnan(after))
                hs.access_after_mbps = after;
            if (h.contains("wifi_capacity_mbps")) hs.wifi_capacity_mbps = value_or<double>(h, "wifi_capacity_mbps", 0.0);
            spec.households.push_back(hs);
        }
    } else {
        throw InvalidArgument("cohort spec: 'households' must be an array or an object");
    }

    if (const auto it = j.find("start_utc"); it != j.end()) {
        if (!it->is_string()) throw InvalidArgument("cohort spec: 'start_utc' must be an RFC 3339 string");
        spec.start_utc = parse_rfc3339(it->get<std::string>());
    }
    spec.days = value_or<int>(j, "days", spec.days);
    spec.wifi_capacity_mbps = range_from_json(j, "wifi_capacity_mbps", spec.wifi_capacity_mbps);
    spec.wifi_test_factor = range_from_json(j, "wifi_test_factor", spec.wifi_test_factor);
    spec.access_noise = range_from_json(j, "access_noise", spec.access_noise);
    spec.wifi_probability_day = value_or<double>(j, "wifi_probability_day", spec.wifi_probability_day);
    spec.wifi_probability_night = value_or<double>(j, "wifi_probability_night", spec.wifi_probability_night);
    spec.day_start_hour_utc = value_or<int>(j, "day_start_hour_utc", spec.day_start_hour_utc);
    spec.day_end_hour_utc = value_or<int>(j, "day_end_hour_utc", spec.day_end_hour_utc);
    spec.test_duration_seconds = value_or<double>(j, "test_duration_seconds", spec.test_duration_seconds);
    validate(spec);
    return spec;
}

nlohmann::ordered_json to_json(const CohortSpec& spec) {
    nlohmann::ordered_json j;
    j["start_utc"] = format_rfc3339(spec.start_utc);
    j["days"] = spec.days;
    j["wifi_capacity_mbps"] = {spec.wifi_capacity_mbps.min, spec.wifi_capacity_mbps.max};
    j["wifi_test_factor"] = {spec.wifi_test_factor.min, spec.wifi_test_factor.max};
    j["access_noise"] = {spec.access_noise.min, spec.access_noise.max};
    j["wifi_probability_day"] = spec.wifi_probability_day;
    j["wifi_probability_night"] = spec.wifi_probability_night;
    j["day_start_hour_utc"] = spec.day_start_hour_utc;
    j["day_end_hour_utc"] = spec.day_end_hour_utc;
    j["test_duration_seconds"] = spec.test_duration_seconds;
    auto households = nlohmann::ordered_json::array();
    for (const auto& h : spec.households) {
        nlohmann::ordered_json hj;
        hj["id"] = h.household_id;
        hj["access_mbps"] = h.access_mbps;
        if (h.access_after_mbps) hj["access_after_mbps"] = *h.access_after_mbps;
        if (h.wifi_capacity_mbps) hj["wifi_capacity_mbps"] = *h.wifi_capacity_mbps;
        households.push_back(hj);
    }
    j["households"] = households;
    return j;
}

std::vector<ThroughputSample> generate_cohort(const CohortSpec& spec, std::uint64_t seed) {
    validate(spec);
    Rng rng(seed);
    const std::int64_t start_ms = to_epoch_ms(spec.start_utc);
    const std::int64_t hours = static_cast<std::int64_t>(spec.days) * 24;
    const std::int64_t change_hour = static_cast<std::int64_t>(spec.days / 2) * 24;
    const auto duration_ms = static_cast<std::int64_t>(std::ceil(spec.test_duration_seconds * 1000.0));

    const auto make = [&](const HouseholdSpec& h, const std::string& device, MeasurementPath path, std::int64_t at_ms,
                          double mbps) {
        const auto bytes =
            static_cast<std::uint64_t>(std::llround(mbps * 1e6 / 8.0 * spec.test_duration_seconds));
        return make_sample(from_epoch_ms(at_ms), h.household_id, device, path, std::max<std::uint64_t>(bytes, 1),
                           spec.test_duration_seconds);
    };

    std::vector<ThroughputSample> samples;
    for (const auto& h : spec.households) {
        const double wifi_capacity = h.wifi_capacity_mbps ? *h.wifi_capacity_mbps : rng.uniform(spec.wifi_capacity_mbps);
        for (std::int64_t hour = 0; hour < hours; ++hour) {
            const std::int64_t hour_ms = start_ms + hour * 3600000;
            const double plan = h.access_after_mbps && hour >= change_hour ? *h.access_after_mbps : h.access_mbps;
            const std::int64_t access_at = hour_ms + rng.integer(0, 600000);
            samples.push_back(make(h, h.household_id + "-router", MeasurementPath::wan_access, access_at,
                                   plan * rng.uniform(spec.access_noise)));

            const auto hour_of_day = static_cast<int>(((hour_ms / 3600000) % 24 + 24) % 24);
            const bool daytime = hour_of_day >= spec.day_start_hour_utc && hour_of_day < spec.day_end_hour_utc;
            if (!rng.chance(daytime ? spec.wifi_probability_day : spec.wifi_probability_night)) continue;
            // WiFi tests avoid the access test's slot so the two never overlap.
            const std::int64_t earliest = access_at - hour_ms + duration_ms + 60000;
            const std::int64_t wifi_at = hour_ms + rng.integer(earliest, 3600000 - duration_ms - 1);
            const std::string device = h.household_id + (rng.chance(0.5) ? "-phone" : "-laptop");
            samples.push_back(make(h, device, MeasurementPath::lan_wifi, wifi_at,
                                   wifi_capacity * rng.uniform(spec.wifi_test_factor)));
        }
    }
    std::stable_sort(samples.begin(), samples.end(), [](const ThroughputSample& a, const ThroughputSample& b) {
        return std::tie(a.timestamp_utc, a.household_id) < std::tie(b.timestamp_utc, b.household_id);
    });
    return samples;
}

nlohmann::ordered_json tier_metadata(const CohortSpec& spec) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& h : spec.households) {
        j[analysis::make_vantage_id(h.household_id, 0)] = analysis::tier_label(analysis::tier_for_speed(h.access_mbps));
        if (h.access_after_mbps)
            j[analysis::make_vantage_id(h.household_id, 1)] =
                analysis::tier_label(analysis::tier_for_speed(*h.access_after_mbps));
    }
    return j;
}

}  // namespace homethru::synth
