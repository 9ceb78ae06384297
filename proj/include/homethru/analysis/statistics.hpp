#pragma once

#include <span>
#include <vector>

#include "homethru/analysis/windows.hpp"

namespace homethru::analysis {

// Even counts average the two middle values. Throws InsufficientData if empty.
double median(std::vector<double> values);

// Nearest-rank percentile: the ceil(p * n)-th smallest value, p in (0, 1].
double nearest_rank_percentile(std::vector<double> values, double p);

// Standard error of the per-window (wifi - access) median differences:
// sample standard deviation (n - 1) over sqrt(n). Needs at least 2 windows.
double sample_error_of_difference(std::span<const CoincidentWindow> windows);

// Fraction of windows that are bottlenecked. Throws InsufficientData if empty.
double bottleneck_prevalence(std::span<const CoincidentWindow> windows);

// The end-to-end speed a user sees: the smaller of the two medians. Both must
// be positive (InvalidArgument otherwise).
double effective_throughput(double median_wifi_mbps, double median_access_mbps);

struct CdfPoint {
    double value = 0.0;
    double cumulative_fraction = 0.0;

    friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

// Empirical CDF with ties merged: one point per distinct value, carrying the
// fraction of inputs <= value. Throws InsufficientData if empty.
std::vector<CdfPoint> prevalence_cdf(std::span<const double> values);

}  // namespace homethru::analysis
