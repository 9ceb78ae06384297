#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace homethru {

// All instants are UTC with millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Parses an RFC 3339 instant ("2021-09-18T06:00:00Z", fractional seconds and
// numeric offsets accepted) and normalizes it to UTC. Sub-millisecond digits
// are truncated. Throws InvalidArgument on malformed input.
Timestamp parse_rfc3339(std::string_view text);

// Canonical form: "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_rfc3339(Timestamp t);

inline std::int64_t to_epoch_ms(Timestamp t) { return t.time_since_epoch().count(); }

inline Timestamp from_epoch_ms(std::int64_t ms) {
    return Timestamp{std::chrono::milliseconds{ms}};
}

inline Timestamp from_epoch_seconds(std::int64_t s) {
    return Timestamp{std::chrono::seconds{s}};
}

Timestamp now_utc();

}  // namespace homethru
