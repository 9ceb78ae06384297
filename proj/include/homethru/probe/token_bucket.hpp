#pragma once

#include <chrono>
#include <cstdint>

namespace homethru::probe {

// Byte-rate shaper. The caller reserves bytes at an instant and is told how
// long to wait before putting them on the wire; tokens may go negative, so
// the wait carries the debt. Over any interval [0, t] the bytes released by
// time t never exceed burst + rate * t.
class TokenBucket {
public:
    using Clock = std::chrono::steady_clock;

    // rate_bytes_per_second > 0; the bucket starts full.
    TokenBucket(double rate_bytes_per_second, double burst_bytes, Clock::time_point start);

    // Megabits per second (decimal) to bytes per second.
    static double mbps_to_bytes_per_second(double mbps) { return mbps * 1e6 / 8.0; }

    // Returns the delay after `now` at which `bytes` may be sent.
    Clock::duration reserve(std::uint64_t bytes, Clock::time_point now);

    double rate() const { return rate_; }
    double burst() const { return burst_; }

private:
    double rate_;
    double burst_;
    double tokens_;
    Clock::time_point last_;
};

}  // namespace homethru::probe
