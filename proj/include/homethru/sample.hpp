#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "homethru/time.hpp"

namespace homethru {

// Which side of the home network a test measured.
enum class MeasurementPath {
    lan_wifi,    // wireless client to the router-adjacent server ("WiFi speed")
    wan_access,  // router vantage point to a remote server ("access speed")
};

std::string_view to_string(MeasurementPath path);
MeasurementPath parse_measurement_path(std::string_view text);

struct ThroughputSample {
    Timestamp timestamp_utc{};
    std::string household_id;
    std::string device_id;
    MeasurementPath path = MeasurementPath::wan_access;
    double throughput_mbps = 0.0;
    double duration_seconds = 0.0;
    std::uint64_t bytes_transferred = 0;
    std::string tool = "ndt7";

    friend bool operator==(const ThroughputSample&, const ThroughputSample&) = default;
};

// Relative tolerance between throughput_mbps and bytes * 8 / duration / 1e6.
inline constexpr double kThroughputConsistencyTolerance = 1e-9;

// Throws ValidationError naming the first violated field.
void validate(const ThroughputSample& sample);

// Builds a sample whose throughput is derived from bytes and duration, so it
// always satisfies the consistency invariant.
ThroughputSample make_sample(Timestamp timestamp, std::string household_id, std::string device_id,
                             MeasurementPath path, std::uint64_t bytes, double duration_seconds,
                             std::string tool = "ndt7");

nlohmann::ordered_json to_json(const ThroughputSample& sample);

// Parses the sample fields out of a JSON object; extra keys are ignored.
// Throws ValidationError on missing or mistyped fields.
ThroughputSample sample_from_json(const nlohmann::json& object);

}  // namespace homethru
