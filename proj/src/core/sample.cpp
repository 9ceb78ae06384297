#include "homethru/sample.hpp"

#include <cmath>
#include <fmt/format.h>

#include "homethru/errors.hpp"
#include "homethru/probe/throughput.hpp"

namespace homethru {

std::string_view to_string(MeasurementPath path) {
    switch (path) {
        case MeasurementPath::lan_wifi:
            return "lan_wifi";
        case MeasurementPath::wan_access:
            return "wan_access";
    }
    return "unknown";
}

MeasurementPath parse_measurement_path(std::string_view text) {
    if (text == "lan_wifi") return MeasurementPath::lan_wifi;
    if (text == "wan_access") return MeasurementPath::wan_access;
    throw InvalidArgument(fmt::format("unknown measurement path '{}' (expected lan_wifi or wan_access)", text));
}

void validate(const ThroughputSample& sample) {
    if (sample.household_id.empty()) throw ValidationError("household_id must not be empty");
    if (!std::isfinite(sample.duration_seconds) || sample.duration_seconds <= 0.0)
        throw ValidationError(fmt::format("duration_seconds must be positive (got {})", sample.duration_seconds));
    if (sample.bytes_transferred == 0) throw ValidationError("bytes_transferred must be positive");
    if (!std::isfinite(sample.throughput_mbps) || sample.throughput_mbps <= 0.0)
        throw ValidationError(fmt::format("throughput_mbps must be positive (got {})", sample.throughput_mbps));

    const double expected = probe::compute_throughput_mbps(sample.bytes_transferred, sample.duration_seconds);
    if (std::abs(sample.throughput_mbps - expected) > kThroughputConsistencyTolerance * expected)
        throw ValidationError(fmt::format(
            "throughput_mbps {} inconsistent with bytes_transferred/duration_seconds (expected {})",
            sample.throughput_mbps, expected));
}

ThroughputSample make_sample(Timestamp timestamp, std::string household_id, std::string device_id,
                             MeasurementPath path, std::uint64_t bytes, double duration_seconds,
                             std::string tool) {
    ThroughputSample s;
    s.timestamp_utc = timestamp;
    s.household_id = std::move(household_id);
    s.device_id = std::move(device_id);
    s.path = path;
    s.bytes_transferred = bytes;
    s.duration_seconds = duration_seconds;
    s.throughput_mbps = probe::compute_throughput_mbps(bytes, duration_seconds);
    s.tool = std::move(tool);
    return s;
}

nlohmann::ordered_json to_json(const ThroughputSample& sample) {
    nlohmann::ordered_json j;
    j["timestamp_utc"] = format_rfc3339(sample.timestamp_utc);
    j["household_id"] = sample.household_id;
    j["device_id"] = sample.device_id;
    j["path"] = to_string(sample.path);
    j["throughput_mbps"] = sample.throughput_mbps;
    j["duration_seconds"] = sample.duration_seconds;
    j["bytes_transferred"] = sample.bytes_transferred;
    j["tool"] = sample.tool;
    return j;
}

namespace {

template <typename T>
T required(const nlohmann::json& object, const char* key) {
    const auto it = object.find(key);
    if (it == object.end()) throw ValidationError(fmt::format("missing field '{}'", key));
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(fmt::format("field '{}' has the wrong type", key));
    }
}

}  // namespace

ThroughputSample sample_from_json(const nlohmann::json& object) {
    if (!object.is_object()) throw ValidationError("sample must be a JSON object");
    ThroughputSample s;
    try {
        s.timestamp_utc = parse_rfc3339(required<std::string>(object, "timestamp_utc"));
        s.path = parse_measurement_path(required<std::string>(object, "path"));
    } catch (const InvalidArgument& e) {
        throw ValidationError(e.what());
    }
    s.household_id = required<std::string>(object, "household_id");
    s.device_id = required<std::string>(object, "device_id");
    s.throughput_mbps = required<double>(object, "throughput_mbps");
    s.duration_seconds = required<double>(object, "duration_seconds");

    const auto& bytes = object.find("bytes_transferred");
    if (bytes == object.end()) throw ValidationError("missing field 'bytes_transferred'");
    if (!bytes->is_number_unsigned())
        throw ValidationError("field 'bytes_transferred' must be a nonnegative integer");
    s.bytes_transferred = bytes->get<std::uint64_t>();

    if (const auto tool = object.find("tool"); tool != object.end()) {
        if (!tool->is_string()) throw ValidationError("field 'tool' has the wrong type");
        s.tool = tool->get<std::string>();
    }
    return s;
}

}  // namespace homethru
