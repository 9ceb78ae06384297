#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "homethru/analysis/windows.hpp"
#include "homethru/sample.hpp"

namespace testsupport {

using homethru::MeasurementPath;
using homethru::Timestamp;

// A 10 s sample whose byte count approximates the requested rate.
inline homethru::ThroughputSample sample_at(const std::string& household, MeasurementPath path, Timestamp t,
                                            double mbps, const std::string& device = "dev") {
    const auto bytes = static_cast<std::uint64_t>(std::llround(mbps * 1e6 / 8.0 * 10.0));
    return homethru::make_sample(t, household, device, path, bytes, 10.0);
}

inline Timestamp epoch_s(std::int64_t s) { return homethru::from_epoch_seconds(s); }

// Window k of a 6 h grid starting at 2021-01-01T00:00:00Z.
inline Timestamp grid(std::int64_t k) { return epoch_s(1609459200 + k * 21600); }

inline homethru::analysis::CoincidentWindow window(std::int64_t k, double wifi, double access,
                                                   const std::string& household = "hh") {
    homethru::analysis::CoincidentWindow w;
    w.window_start_utc = grid(k);
    w.household_id = household;
    w.median_wifi_mbps = wifi;
    w.median_access_mbps = access;
    w.wifi_sample_count = 1;
    w.access_sample_count = 1;
    w.is_bottleneck = wifi < access;
    return w;
}

inline bool close_rel(double a, double b, double rel = 1e-9) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Fresh, empty directory under the system temp dir; removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("homethru-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
