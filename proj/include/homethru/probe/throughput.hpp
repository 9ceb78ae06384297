#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace homethru::probe {

// URL path of the streaming download test.
inline constexpr std::string_view kDownloadPath = "/ndt/v7/download";
inline constexpr std::string_view kSubprotocol = "net.measurementlab.ndt.v7";

struct TestConfig {
    double duration_seconds = 10.0;
    double snapshot_interval_seconds = 0.25;
    std::uint64_t initial_payload_bytes = 8192;
    std::uint64_t max_payload_bytes = 16777216;
};

// Throws InvalidArgument when a field is out of range.
void validate(const TestConfig& config);

// Progress report carried in text frames: how long the sender has been
// streaming and how many payload bytes it has put on the wire.
struct MeasurementSnapshot {
    double elapsed_seconds = 0.0;
    std::uint64_t bytes_transferred = 0;

    friend bool operator==(const MeasurementSnapshot&, const MeasurementSnapshot&) = default;
};

// Decimal megabits per second. Throws InvalidArgument if elapsed_seconds <= 0.
double compute_throughput_mbps(std::uint64_t bytes_transferred, double elapsed_seconds);

// Doubles the binary message size once the current size falls below 1/16 of
// the bytes already sent, never exceeding config.max_payload_bytes.
std::uint64_t next_payload_size(std::uint64_t current_size, std::uint64_t total_bytes_sent,
                                const TestConfig& config);

// Throws ProtocolError on malformed JSON, missing fields, or negative values.
MeasurementSnapshot parse_snapshot(std::string_view message_text);
std::string format_snapshot(const MeasurementSnapshot& snapshot);

}  // namespace homethru::probe
