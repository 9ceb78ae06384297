#include "homethru/probe/endpoint.hpp"

#include <charconv>
#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru::probe {

std::string Endpoint::to_string() const {
    if (host.find(':') != std::string::npos) return fmt::format("[{}]:{}", host, port);
    return fmt::format("{}:{}", host, port);
}

Endpoint parse_endpoint(std::string_view text) {
    const auto bad = [&] { return InvalidArgument(fmt::format("malformed endpoint '{}' (expected host:port)", text)); };

    std::string_view rest = text;
    if (rest.starts_with("ws://")) rest.remove_prefix(5);
    if (const auto slash = rest.find('/'); slash != std::string_view::npos) rest = rest.substr(0, slash);

    std::string_view host;
    std::string_view port_text;
    if (rest.starts_with('[')) {
        const auto close = rest.find(']');
        if (close == std::string_view::npos || close + 1 >= rest.size() || rest[close + 1] != ':') throw bad();
        host = rest.substr(1, close - 1);
        port_text = rest.substr(close + 2);
    } else {
        const auto colon = rest.rfind(':');
        if (colon == std::string_view::npos) throw bad();
        host = rest.substr(0, colon);
        port_text = rest.substr(colon + 1);
    }
    if (host.empty() || port_text.empty()) throw bad();

    unsigned port = 0;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || end != port_text.data() + port_text.size() || port > 65535) throw bad();
    return Endpoint{std::string(host), static_cast<std::uint16_t>(port)};
}

}  // namespace homethru::probe
