#include "homethru/probe/token_bucket.hpp"

#include <algorithm>

#include "homethru/errors.hpp"

namespace homethru::probe {

TokenBucket::TokenBucket(double rate_bytes_per_second, double burst_bytes, Clock::time_point start)
    : rate_(rate_bytes_per_second), burst_(burst_bytes), tokens_(burst_bytes), last_(start) {
    if (!(rate_ > 0.0)) throw InvalidArgument("token bucket rate must be positive");
    if (burst_ < 0.0) throw InvalidArgument("token bucket burst must be nonnegative");
}

TokenBucket::Clock::duration TokenBucket::reserve(std::uint64_t bytes, Clock::time_point now) {
    if (now > last_) {
        const double dt = std::chrono::duration<double>(now - last_).count();
        tokens_ = std::min(burst_, tokens_ + dt * rate_);
        last_ = now;
    }
    tokens_ -= static_cast<double>(bytes);
    if (tokens_ >= 0.0) return Clock::duration::zero();
    return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(-tokens_ / rate_));
}

}  // namespace homethru::probe
