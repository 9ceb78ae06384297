#include "homethru/probe/throughput.hpp"

#include <cmath>
#include <fmt/format.h>
#include <json.hpp>

#include "homethru/errors.hpp"

namespace homethru::probe {

void validate(const TestConfig& config) {
    if (!(config.duration_seconds > 0.0) || !std::isfinite(config.duration_seconds))
        throw InvalidArgument(fmt::format("test duration must be positive (got {})", config.duration_seconds));
    if (!(config.snapshot_interval_seconds > 0.0))
        throw InvalidArgument("snapshot interval must be positive");
    if (config.duration_seconds <= config.snapshot_interval_seconds)
        throw InvalidArgument("test duration must exceed the snapshot interval");
    if (config.initial_payload_bytes == 0) throw InvalidArgument("initial payload size must be positive");
    if (config.initial_payload_bytes > config.max_payload_bytes)
        throw InvalidArgument("initial payload size exceeds the maximum payload size");
}

double compute_throughput_mbps(std::uint64_t bytes_transferred, double elapsed_seconds) {
    if (!(elapsed_seconds > 0.0))
        throw InvalidArgument(fmt::format("elapsed time must be positive (got {})", elapsed_seconds));
    return static_cast<double>(bytes_transferred) * 8.0 / elapsed_seconds / 1e6;
}

std::uint64_t next_payload_size(std::uint64_t current_size, std::uint64_t total_bytes_sent,
                                const TestConfig& config) {
    if (current_size < total_bytes_sent / 16 && current_size <= config.max_payload_bytes / 2)
        return current_size * 2;
    return current_size;
}

MeasurementSnapshot parse_snapshot(std::string_view message_text) {
    const auto doc = nlohmann::json::parse(message_text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) throw ProtocolError("snapshot is not a JSON object");

    const auto elapsed = doc.find("elapsed_seconds");
    const auto bytes = doc.find("bytes_transferred");
    if (elapsed == doc.end() || bytes == doc.end()) throw ProtocolError("snapshot is missing a required field");
    if (!elapsed->is_number() || !bytes->is_number_integer())
        throw ProtocolError("snapshot field has the wrong type");
    if (elapsed->get<double>() < 0.0 || !bytes->is_number_unsigned())
        throw ProtocolError("snapshot field is negative");
    if (!std::isfinite(elapsed->get<double>())) throw ProtocolError("snapshot elapsed time is not finite");

    return MeasurementSnapshot{elapsed->get<double>(), bytes->get<std::uint64_t>()};
}

std::string format_snapshot(const MeasurementSnapshot& snapshot) {
    nlohmann::ordered_json j;
    j["elapsed_seconds"] = snapshot.elapsed_seconds;
    j["bytes_transferred"] = snapshot.bytes_transferred;
    return j.dump();
}

}  // namespace homethru::probe
