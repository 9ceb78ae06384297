#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "homethru/analysis/cohort.hpp"
#include "homethru/analysis/segmentation.hpp"
#include "homethru/analysis/statistics.hpp"
#include "homethru/analysis/tiers.hpp"
#include "homethru/analysis/windows.hpp"
#include "homethru/probe/throughput.hpp"
#include "homethru/sample.hpp"
#include "support.hpp"

namespace props {

namespace {

using namespace homethru;
using namespace homethru::analysis;
using Rng = std::mt19937_64;

// Runs `cases` trials; a trial fails when `body` reports any violation.
PropertyResult run(const char* name, std::uint64_t seed, std::size_t cases,
                   const std::function<void(Rng&, std::vector<std::string>&)>& body) {
    PropertyResult result{name, 0, 0, {}};
    Rng rng(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        std::vector<std::string> violations;
        try {
            body(rng, violations);
        } catch (const std::exception& e) {
            violations.push_back(fmt::format("unexpected exception: {}", e.what()));
        }
        ++result.cases;
        if (!violations.empty()) {
            if (result.failures == 0) result.first_failure = fmt::format("case {}: {}", i, violations.front());
            ++result.failures;
        }
    }
    return result;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

template <typename T>
T integer(Rng& rng, T lo, T hi) {
    return std::uniform_int_distribution<T>(lo, hi)(rng);
}

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

bool rel_eq(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

// One household's samples over `windows` 6 h slots, each slot holding a
// random mix of wifi and access tests (some slots only one path).
std::vector<ThroughputSample> random_household(Rng& rng, const std::string& household, std::int64_t windows) {
    using testsupport::grid;
    std::vector<ThroughputSample> samples;
    const double access_level = log_uniform(rng, 5.0, 1000.0);
    const double wifi_level = log_uniform(rng, 5.0, 1000.0);
    for (std::int64_t k = 0; k < windows; ++k) {
        const int wifi_count = integer(rng, 0, 3);
        const int access_count = integer(rng, 0, 4);
        for (int j = 0; j < wifi_count + access_count; ++j) {
            const bool wifi = j < wifi_count;
            const auto offset = std::chrono::milliseconds(integer<std::int64_t>(rng, 0, 21600 * 1000 - 1));
            const double level = wifi ? wifi_level : access_level;
            samples.push_back(testsupport::sample_at(household, wifi ? MeasurementPath::lan_wifi : MeasurementPath::wan_access,
                                                     grid(k) + offset, level * uniform(rng, 0.5, 1.5)));
        }
    }
    return samples;
}

CoincidentWindow random_window(Rng& rng, std::int64_t k) {
    // Small integer speeds make ties likely, which exercises the strict rule.
    const bool ties = integer(rng, 0, 3) == 0;
    const double wifi = ties ? integer(rng, 1, 5) * 10.0 : log_uniform(rng, 1.0, 1000.0);
    const double access = ties ? integer(rng, 1, 5) * 10.0 : log_uniform(rng, 1.0, 1000.0);
    return testsupport::window(k, wifi, access);
}

}  // namespace

PropertyResult throughput_arithmetic(std::uint64_t seed, std::size_t cases) {
    return run("throughput arithmetic", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        const auto bytes = integer<std::uint64_t>(rng, 0, std::uint64_t{1} << 40);
        const double elapsed = log_uniform(rng, 1e-3, 1e4);
        const double mbps = probe::compute_throughput_mbps(bytes, elapsed);
        const double expected = static_cast<double>(bytes) * 8.0 / elapsed / 1e6;
        if (!(mbps >= 0.0)) bad.push_back(fmt::format("negative throughput {}", mbps));
        if (!rel_eq(mbps, expected, 1e-12) && !(bytes == 0 && mbps == 0.0))
            bad.push_back(fmt::format("{} B over {} s gave {} (expected {})", bytes, elapsed, mbps, expected));

        const auto k = integer<std::uint64_t>(rng, 2, 1000);
        const double scaled = probe::compute_throughput_mbps(bytes * k, elapsed);
        if (!rel_eq(scaled, static_cast<double>(k) * mbps, 1e-12) && !(bytes == 0 && scaled == 0.0))
            bad.push_back(fmt::format("not linear: {} x {} B gave {} vs {}", k, bytes, scaled, k * mbps));

        const double longer = elapsed * uniform(rng, 1.0 + 1e-6, 10.0);
        if (bytes > 0 && !(probe::compute_throughput_mbps(bytes, longer) < mbps))
            bad.push_back(fmt::format("not decreasing in elapsed at {} B: {} s vs {} s", bytes, elapsed, longer));

        if (bytes > 0) {
            const auto sample = make_sample(testsupport::grid(0), "h", "d", MeasurementPath::wan_access, bytes, elapsed);
            validate(sample);
            if (!rel_eq(sample.throughput_mbps, expected, 1e-9))
                bad.push_back("sample throughput disagrees with bytes and duration");
        }
    });
}

PropertyResult payload_growth_cap(std::uint64_t seed, std::size_t cases) {
    return run("payload growth cap", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        probe::TestConfig config;
        config.max_payload_bytes = integer<std::uint64_t>(rng, 1, std::uint64_t{1} << 30);
        config.initial_payload_bytes = integer<std::uint64_t>(rng, 1, std::min<std::uint64_t>(config.max_payload_bytes, 1 << 16));
        probe::validate(config);
        std::uint64_t size = config.initial_payload_bytes;
        std::uint64_t sent = 0;
        for (int step = 0; step < 400; ++step) {
            sent += size * integer<std::uint64_t>(rng, 1, 8);
            const auto next = probe::next_payload_size(size, sent, config);
            if (next < size) bad.push_back(fmt::format("shrank {} -> {}", size, next));
            if (next > config.max_payload_bytes)
                bad.push_back(fmt::format("{} exceeds cap {}", next, config.max_payload_bytes));
            if (next != size && next != 2 * size) bad.push_back(fmt::format("grew {} -> {}, not a doubling", size, next));
            if (next > size && !(size < sent / 16)) bad.push_back(fmt::format("grew at {} with only {} sent", size, sent));
            size = next;
        }
    });
}

PropertyResult cdf_monotonicity(std::uint64_t seed, std::size_t cases) {
    return run("CDF monotonicity", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        const auto n = integer<std::size_t>(rng, 1, 300);
        const bool discrete = integer(rng, 0, 1) == 0;
        std::vector<double> values(n);
        for (auto& v : values) v = discrete ? integer(rng, 0, 20) / 20.0 : uniform(rng, 0.0, 1.0);
        const auto cdf = prevalence_cdf(values);
        if (cdf.empty()) {
            bad.push_back("empty CDF");
            return;
        }
        for (std::size_t i = 0; i < cdf.size(); ++i) {
            const auto& point = cdf[i];
            if (!(point.cumulative_fraction > 0.0 && point.cumulative_fraction <= 1.0))
                bad.push_back(fmt::format("fraction {} outside (0, 1]", point.cumulative_fraction));
            if (i > 0 && !(cdf[i - 1].value < point.value)) bad.push_back("values not strictly increasing");
            if (i > 0 && !(cdf[i - 1].cumulative_fraction <= point.cumulative_fraction))
                bad.push_back("fractions decreasing");
            const auto at_or_below = std::count_if(values.begin(), values.end(), [&](double v) { return v <= point.value; });
            if (point.cumulative_fraction != static_cast<double>(at_or_below) / static_cast<double>(n))
                bad.push_back(fmt::format("F({}) = {} but {} of {} inputs are <= it", point.value,
                                          point.cumulative_fraction, at_or_below, n));
        }
        if (cdf.back().cumulative_fraction != 1.0) bad.push_back("last point is not 1");
    });
}

PropertyResult effective_throughput_is_min(std::uint64_t seed, std::size_t cases) {
    return run("effective throughput = min", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        const double wifi = log_uniform(rng, 1e-3, 1e4);
        const double access = integer(rng, 0, 9) == 0 ? wifi : log_uniform(rng, 1e-3, 1e4);
        const double e = effective_throughput(wifi, access);
        if (e != std::min(wifi, access)) bad.push_back(fmt::format("min({}, {}) gave {}", wifi, access, e));
        if (e != wifi && e != access) bad.push_back("result is neither argument");
        if (e > wifi || e > access) bad.push_back("result exceeds an argument");

        // Same invariant through the per-vantage statistics.
        VantageSegment segment;
        segment.vantage.vantage_id = "hh/0";
        segment.vantage.household_id = "hh";
        const auto n = integer(rng, 1, 40);
        for (int k = 0; k < n; ++k) segment.windows.push_back(random_window(rng, k));
        const auto stats = compute_vantage_stats(segment, {});
        if (stats.effective_throughput_mbps != std::min(stats.median_wifi_mbps, stats.median_access_mbps))
            bad.push_back("vantage effective throughput is not the smaller median");
        if (!(stats.gap_mbps >= 0.0) || stats.gap_mbps != stats.median_access_mbps - stats.effective_throughput_mbps)
            bad.push_back(fmt::format("gap {} inconsistent", stats.gap_mbps));
    });
}

PropertyResult tier_partition(std::uint64_t seed, std::size_t cases) {
    return run("tier partition", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        static constexpr double kEdges[] = {50.0, 100.0, 200.0, 400.0, 800.0};
        double speed = 0.0;
        switch (integer(rng, 0, 3)) {
            case 0:  // on or next to a bin edge
                speed = kEdges[integer(rng, 0, 4)];
                if (integer(rng, 0, 1) == 0) speed = std::nextafter(speed, 0.0);
                break;
            case 1:
                speed = std::numeric_limits<double>::denorm_min() * integer(rng, 1, 1000);
                break;
            default:
                speed = log_uniform(rng, 1e-6, 1e7);
        }
        const auto tier = tier_for_speed(speed);
        int containing = 0;
        for (std::size_t i = 0; i < kAllTiers.size(); ++i) {
            const double lower = i == 0 ? 0.0 : tier_lower_bound_mbps(kAllTiers[i]);
            const double upper =
                i + 1 < kAllTiers.size() ? tier_lower_bound_mbps(kAllTiers[i + 1]) : std::numeric_limits<double>::infinity();
            if (speed >= lower && speed < upper) {
                ++containing;
                if (kAllTiers[i] != tier) bad.push_back(fmt::format("{} Mbps assigned to {}", speed, tier_label(tier)));
            }
        }
        if (containing != 1) bad.push_back(fmt::format("{} Mbps falls in {} bins", speed, containing));
        if (parse_speed_tier(tier_label(tier)) != tier) bad.push_back("tier label does not round-trip");
    });
}

PropertyResult median_permutation_invariance(std::uint64_t seed, std::size_t cases) {
    return run("permutation invariance of medians", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        std::vector<double> values(integer<std::size_t>(rng, 1, 60));
        for (auto& v : values) v = integer(rng, 0, 2) == 0 ? integer(rng, 1, 4) * 25.0 : uniform(rng, 0.1, 1000.0);
        const double m = median(values);
        auto shuffled = values;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        if (median(shuffled) != m) bad.push_back("median changed under permutation");

        auto samples = random_household(rng, "hh", integer(rng, 1, 12));
        if (samples.empty()) return;
        const auto windows = resample_windows(samples);
        std::shuffle(samples.begin(), samples.end(), rng);
        if (resample_windows(samples) != windows) bad.push_back("windows changed under permutation");
        for (const auto& w : windows) {
            if (!(w.median_wifi_mbps > 0.0 && w.median_access_mbps > 0.0)) bad.push_back("nonpositive median");
            if (w.is_bottleneck != (w.median_wifi_mbps < w.median_access_mbps)) bad.push_back("bottleneck flag wrong");
        }
    });
}

PropertyResult prevalence_bounds(std::uint64_t seed, std::size_t cases) {
    return run("prevalence in [0, 1]", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        std::vector<CoincidentWindow> windows;
        const auto n = integer(rng, 1, 100);
        for (int k = 0; k < n; ++k) windows.push_back(random_window(rng, k));
        const double p = bottleneck_prevalence(windows);
        if (!(p >= 0.0 && p <= 1.0)) bad.push_back(fmt::format("prevalence {}", p));
        const auto count = std::count_if(windows.begin(), windows.end(), [](const auto& w) { return w.is_bottleneck; });
        if (p != static_cast<double>(count) / n) bad.push_back("prevalence is not the bottleneck fraction");
    });
}

PropertyResult non_bottleneck_window_monotonicity(std::uint64_t seed, std::size_t cases) {
    return run("adding a non-bottleneck window never raises prevalence", seed, cases,
               [](Rng& rng, std::vector<std::string>& bad) {
                   std::vector<CoincidentWindow> windows;
                   const auto n = integer(rng, 1, 100);
                   for (int k = 0; k < n; ++k) windows.push_back(random_window(rng, k));
                   const double before = bottleneck_prevalence(windows);
                   const double access = log_uniform(rng, 1.0, 1000.0);
                   const double wifi = integer(rng, 0, 1) == 0 ? access : access * uniform(rng, 1.0, 3.0);
                   const auto at = integer<std::size_t>(rng, 0, windows.size());
                   windows.insert(windows.begin() + static_cast<std::ptrdiff_t>(at),
                                  testsupport::window(n + 1, wifi, access));
                   const double after = bottleneck_prevalence(windows);
                   if (after > before) bad.push_back(fmt::format("prevalence rose {} -> {}", before, after));
               });
}

PropertyResult access_scaling_monotonicity(std::uint64_t seed, std::size_t cases) {
    return run("scaling access by c > 1 never lowers prevalence", seed, cases,
               [](Rng& rng, std::vector<std::string>& bad) {
                   const auto samples = random_household(rng, "hh", integer(rng, 1, 20));
                   const auto before = resample_windows(samples);
                   if (before.empty()) return;
                   const double c = uniform(rng, 1.0 + 1e-9, 4.0);
                   std::vector<ThroughputSample> scaled;
                   for (const auto& s : samples)
                       scaled.push_back(s.path == MeasurementPath::wan_access
                                            ? testsupport::sample_at(s.household_id, s.path, s.timestamp_utc,
                                                                     s.throughput_mbps * c)
                                            : s);
                   const auto after = resample_windows(scaled);
                   if (after.size() != before.size()) {
                       bad.push_back("window count changed");
                       return;
                   }
                   const double p0 = bottleneck_prevalence(before);
                   const double p1 = bottleneck_prevalence(after);
                   if (p1 < p0) bad.push_back(fmt::format("prevalence fell {} -> {} at c = {}", p0, p1, c));
               });
}

PropertyResult window_alignment(std::uint64_t seed, std::size_t cases) {
    return run("window alignment", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        static constexpr std::int64_t kLengths[] = {21600, 3600, 43200, 86400, 7, 1};
        const auto length = integer(rng, 0, 2) == 0 ? kLengths[integer(rng, 0, 5)] : std::int64_t{21600};
        const auto t = from_epoch_ms(integer<std::int64_t>(rng, -4'000'000'000'000, 4'000'000'000'000));
        const auto start = window_start_for(t, length);
        const auto start_ms = to_epoch_ms(start);
        if (start_ms % (length * 1000) != 0) bad.push_back(fmt::format("{} not aligned to {} s", start_ms, length));
        if (!(start <= t && t < start + std::chrono::seconds(length)))
            bad.push_back(fmt::format("{} not inside window starting {}", to_epoch_ms(t), start_ms));

        const auto samples = random_household(rng, "hh", integer(rng, 1, 8));
        for (const auto& w : resample_windows(samples, length))
            if (to_epoch_ms(w.window_start_utc) % (length * 1000) != 0) bad.push_back("resampled window misaligned");
    });
}

PropertyResult split_preserves_windows(std::uint64_t seed, std::size_t cases) {
    return run("splitting preserves the window multiset", seed, cases, [](Rng& rng, std::vector<std::string>& bad) {
        std::vector<CoincidentWindow> windows;
        std::int64_t k = 0;
        const auto n = integer(rng, 1, 80);
        for (int i = 0; i < n; ++i) {
            k += integer(rng, 1, 3);
            windows.push_back(random_window(rng, k));
        }
        std::vector<Timestamp> splits;
        for (std::size_t i = 1; i < windows.size(); ++i)
            if (integer(rng, 0, 9) == 0) splits.push_back(windows[i].window_start_utc);
        const auto segments = split_household("hh", windows, splits);
        if (segments.size() != splits.size() + 1) bad.push_back("wrong segment count");
        std::vector<CoincidentWindow> joined;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            joined.insert(joined.end(), segments[i].windows.begin(), segments[i].windows.end());
            if (i > 0 && segments[i].vantage.period_start_utc != segments[i - 1].vantage.period_end_utc)
                bad.push_back("segments not contiguous");
        }
        if (joined != windows) bad.push_back("windows lost, duplicated or reordered");
    });
}

std::vector<PropertyResult> core_suite(std::uint64_t seed, std::size_t cases) {
    return {throughput_arithmetic(seed, cases),       payload_growth_cap(seed + 1, cases),
            cdf_monotonicity(seed + 2, cases),        effective_throughput_is_min(seed + 3, cases),
            tier_partition(seed + 4, cases),          median_permutation_invariance(seed + 5, cases)};
}

std::vector<PropertyResult> extended_suite(std::uint64_t seed, std::size_t cases) {
    return {prevalence_bounds(seed, cases), non_bottleneck_window_monotonicity(seed + 1, cases),
            access_scaling_monotonicity(seed + 2, cases), window_alignment(seed + 3, cases),
            split_preserves_windows(seed + 4, cases)};
}

}  // namespace props
