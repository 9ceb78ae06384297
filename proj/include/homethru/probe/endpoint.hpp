#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace homethru::probe {

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string to_string() const;
};

// Accepts "host:port", "[v6addr]:port", or a ws:// URL whose path is ignored.
// Throws InvalidArgument.
Endpoint parse_endpoint(std::string_view text);

}  // namespace homethru::probe
