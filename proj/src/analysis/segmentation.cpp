#include "homethru/analysis/segmentation.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "homethru/analysis/statistics.hpp"
#include "homethru/errors.hpp"

namespace homethru::analysis {

namespace {

double range_median(const std::vector<double>& values, std::size_t begin, std::size_t end) {
    return median(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(begin),
                                      values.begin() + static_cast<std::ptrdiff_t>(end)));
}

double abs_deviation(const std::vector<double>& values, std::size_t begin, std::size_t end) {
    if (begin == end) return 0.0;
    const double center = range_median(values, begin, end);
    double total = 0.0;
    for (std::size_t j = begin; j < end; ++j) total += std::abs(values[j] - center);
    return total;
}

}  // namespace

std::vector<Timestamp> detect_access_change(std::span<const CoincidentWindow> windows,
                                            const ChangeDetectionOptions& options) {
    if (!(options.ratio_threshold > 1.0)) throw InvalidArgument("change ratio threshold must exceed 1");
    if (options.span_windows == 0 || options.sustain_windows == 0)
        throw InvalidArgument("change detection spans must be positive");

    const std::size_t n = windows.size();
    const std::size_t span = options.span_windows;
    const std::size_t sustain = options.sustain_windows;
    if (n < span + sustain) return {};

    std::vector<double> access(n);
    std::vector<double> log_access(n);
    for (std::size_t i = 0; i < n; ++i) {
        access[i] = windows[i].median_access_mbps;
        log_access[i] = std::log(access[i]);
    }

    std::vector<bool> candidate(n + 1, false);
    for (std::size_t i = span; i + sustain <= n; ++i) {
        const double before = range_median(access, i - span, i);
        const double after = range_median(access, i, i + sustain);
        const double ratio = after / before;
        candidate[i] = ratio > options.ratio_threshold || ratio < 1.0 / options.ratio_threshold;
    }

    std::vector<std::size_t> splits;
    std::size_t i = span;
    while (i + sustain <= n) {
        if (!candidate[i]) {
            ++i;
            continue;
        }
        const std::size_t run_begin = i;
        while (i + sustain <= n && candidate[i]) ++i;
        const std::size_t run_end = i;  // exclusive

        const std::size_t lo = run_begin - span;
        const std::size_t hi = std::min(n, run_end - 1 + sustain);
        std::size_t best = run_begin;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t at = run_begin; at < run_end; ++at) {
            const double cost = abs_deviation(log_access, lo, at) + abs_deviation(log_access, at, hi);
            if (cost < best_cost) {
                best_cost = cost;
                best = at;
            }
        }
        if (splits.empty() || best - splits.back() >= sustain) splits.push_back(best);
    }

    std::vector<Timestamp> instants;
    instants.reserve(splits.size());
    for (const auto index : splits) instants.push_back(windows[index].window_start_utc);
    return instants;
}

std::string make_vantage_id(const std::string& household_id, std::size_t segment_index) {
    return fmt::format("{}/{}", household_id, segment_index);
}

std::vector<VantageSegment> split_household(const std::string& household_id,
                                            std::span<const CoincidentWindow> windows,
                                            std::span<const Timestamp> split_instants,
                                            std::int64_t window_seconds) {
    if (windows.empty()) {
        if (!split_instants.empty()) throw InvalidArgument("cannot split a household with no windows");
        return {};
    }
    const Timestamp period_start = windows.front().window_start_utc;
    const Timestamp period_end = windows.back().window_start_utc + std::chrono::seconds(window_seconds);

    for (std::size_t k = 0; k < split_instants.size(); ++k) {
        const auto at = split_instants[k];
        if (at <= period_start || at >= period_end)
            throw InvalidArgument(fmt::format("split {} lies outside household period [{}, {})", format_rfc3339(at),
                                              format_rfc3339(period_start), format_rfc3339(period_end)));
        if (k > 0 && at <= split_instants[k - 1]) throw InvalidArgument("split instants must be strictly increasing");
    }

    std::vector<VantageSegment> segments(split_instants.size() + 1);
    for (std::size_t k = 0; k < segments.size(); ++k) {
        auto& vp = segments[k].vantage;
        vp.household_id = household_id;
        vp.segment_index = k;
        vp.vantage_id = make_vantage_id(household_id, k);
        vp.period_start_utc = k == 0 ? period_start : split_instants[k - 1];
        vp.period_end_utc = k == split_instants.size() ? period_end : split_instants[k];
    }
    std::size_t segment = 0;
    for (const auto& w : windows) {
        while (segment < split_instants.size() && w.window_start_utc >= split_instants[segment]) ++segment;
        segments[segment].windows.push_back(w);
    }
    return segments;
}

}  // namespace homethru::analysis
