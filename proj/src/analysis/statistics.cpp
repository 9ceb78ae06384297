#include "homethru/analysis/statistics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru::analysis {

double median(std::vector<double> values) {
    if (values.empty()) throw InsufficientData("median of an empty set");
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return (lower + upper) / 2.0;
}

double nearest_rank_percentile(std::vector<double> values, double p) {
    if (values.empty()) throw InsufficientData("percentile of an empty set");
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument(fmt::format("percentile {} outside (0, 1]", p));
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    const auto index = std::clamp<std::size_t>(rank, 1, values.size()) - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(index), values.end());
    return values[index];
}

double sample_error_of_difference(std::span<const CoincidentWindow> windows) {
    if (windows.size() < 2)
        throw InsufficientData(fmt::format("sample error needs at least 2 windows, got {}", windows.size()));
    // Welford's running mean and sum of squared deviations.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (const auto& w : windows) {
        const double d = w.median_wifi_mbps - w.median_access_mbps;
        ++n;
        const double delta = d - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (d - mean);
    }
    const double variance = m2 / static_cast<double>(n - 1);
    return std::sqrt(variance) / std::sqrt(static_cast<double>(n));
}

double bottleneck_prevalence(std::span<const CoincidentWindow> windows) {
    if (windows.empty()) throw InsufficientData("prevalence needs at least one window");
    const auto hits = std::count_if(windows.begin(), windows.end(), [](const auto& w) { return w.is_bottleneck; });
    return static_cast<double>(hits) / static_cast<double>(windows.size());
}

double effective_throughput(double median_wifi_mbps, double median_access_mbps) {
    if (!(median_wifi_mbps > 0.0) || !(median_access_mbps > 0.0))
        throw InvalidArgument(fmt::format("effective throughput needs positive medians (wifi {}, access {})",
                                          median_wifi_mbps, median_access_mbps));
    return std::min(median_wifi_mbps, median_access_mbps);
}

std::vector<CdfPoint> prevalence_cdf(std::span<const double> values) {
    if (values.empty()) throw InsufficientData("CDF of an empty set");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    std::vector<CdfPoint> points;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        points.push_back({sorted[i], static_cast<double>(i + 1) / n});
    }
    return points;
}

}  // namespace homethru::analysis
