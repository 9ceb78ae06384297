#include "homethru/probe/download_client.hpp"

#include <optional>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru::probe {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using SteadyClock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kReadBytes = 64 * 1024;
constexpr std::size_t kMaxTextMessage = 64 * 1024;
constexpr auto kConnectTimeout = std::chrono::seconds(10);
// Covers the server's admission wait for the test slot.
constexpr auto kHandshakeTimeout = std::chrono::seconds(130);

// Receiver keeps reading for this long past the configured duration before it
// stops the test itself.
SteadyClock::duration grace_period(const TestConfig& config) {
    const double seconds = std::max(5.0, config.duration_seconds * 0.5);
    return std::chrono::duration_cast<SteadyClock::duration>(
        std::chrono::duration<double>(config.duration_seconds + seconds));
}

asio::awaitable<DownloadResult> download(const Endpoint& endpoint, const TestConfig& config,
                                         const TestLabels& labels) {
    auto executor = co_await asio::this_coro::executor;
    boost::system::error_code ec;

    tcp::resolver resolver(executor);
    const auto resolved = co_await resolver.async_resolve(endpoint.host, std::to_string(endpoint.port),
                                                          asio::redirect_error(asio::use_awaitable, ec));
    if (ec) throw TransportError(fmt::format("cannot resolve {}: {}", endpoint.to_string(), ec.message()));

    websocket::stream<beast::tcp_stream> ws(executor);
    beast::get_lowest_layer(ws).expires_after(kConnectTimeout);
    co_await beast::get_lowest_layer(ws).async_connect(resolved, asio::redirect_error(asio::use_awaitable, ec));
    if (ec) throw TransportError(fmt::format("cannot connect to {}: {}", endpoint.to_string(), ec.message()));
    beast::get_lowest_layer(ws).expires_never();

    ws.set_option(websocket::stream_base::timeout{kHandshakeTimeout, websocket::stream_base::none(), false});
    ws.set_option(websocket::stream_base::decorator([](websocket::request_type& request) {
        request.set(http::field::sec_websocket_protocol, std::string(kSubprotocol));
        request.set(http::field::user_agent, "homethru");
    }));
    ws.read_message_max(0);

    websocket::response_type response;
    co_await ws.async_handshake(response, endpoint.to_string(), std::string(kDownloadPath),
                                asio::redirect_error(asio::use_awaitable, ec));
    if (ec) {
        if (response.result() == http::status::service_unavailable)
            throw BusyError(fmt::format("{} is busy running another test", endpoint.to_string()));
        if (ec == websocket::error::upgrade_declined)
            throw ProtocolError(fmt::format("{} declined the upgrade (HTTP {})", endpoint.to_string(),
                                            response.result_int()));
        throw TransportError(fmt::format("handshake with {} failed: {}", endpoint.to_string(), ec.message()));
    }

    DownloadResult result;
    const auto start = SteadyClock::now();
    const auto start_utc = now_utc();

    bool deadline_hit = false;
    asio::steady_timer deadline(executor);
    deadline.expires_after(grace_period(config));
    deadline.async_wait([&](boost::system::error_code timer_ec) {
        if (timer_ec) return;
        deadline_hit = true;
        beast::get_lowest_layer(ws).close();
    });

    std::vector<char> buffer(kReadBytes);
    std::string text;
    std::uint64_t received = 0;
    double next_client_snapshot = config.snapshot_interval_seconds;
    bool clean = false;
    boost::system::error_code stream_error;

    while (true) {
        const auto n = co_await ws.async_read_some(asio::buffer(buffer), asio::redirect_error(asio::use_awaitable, ec));
        const double elapsed = std::chrono::duration<double>(SteadyClock::now() - start).count();
        if (ec) {
            clean = ec == websocket::error::closed || deadline_hit;
            stream_error = ec;
            break;
        }
        if (ws.got_text()) {
            text.append(buffer.data(), n);
            if (text.size() > kMaxTextMessage) throw ProtocolError("snapshot message too large");
            if (ws.is_message_done()) {
                result.server_snapshots.push_back(parse_snapshot(text));
                text.clear();
            }
        } else {
            received += n;
        }
        if (elapsed >= next_client_snapshot) {
            result.client_snapshots.push_back({elapsed, received});
            next_client_snapshot = (std::floor(elapsed / config.snapshot_interval_seconds) + 1) *
                                   config.snapshot_interval_seconds;
        }
    }
    deadline.cancel();

    const double elapsed = std::chrono::duration<double>(SteadyClock::now() - start).count();
    if (elapsed < 0.1 * config.duration_seconds || received == 0)
        throw IncompleteTestError(fmt::format("test ended after {:.3f} s with {} bytes ({})", elapsed, received,
                                              stream_error.message()));
    if (!clean)
        throw TransportError(fmt::format("stream from {} broke after {:.3f} s: {}", endpoint.to_string(), elapsed,
                                         stream_error.message()));

    if (result.client_snapshots.empty() || result.client_snapshots.back().elapsed_seconds < elapsed)
        result.client_snapshots.push_back({elapsed, received});
    result.sample = make_sample(start_utc, labels.household_id, labels.device_id, labels.path, received, elapsed,
                                labels.tool);
    co_return result;
}

}  // namespace

DownloadResult run_download_test(const Endpoint& endpoint, const TestConfig& config, const TestLabels& labels) {
    validate(config);
    if (labels.household_id.empty()) throw InvalidArgument("household_id must not be empty");

    asio::io_context io;
    std::optional<DownloadResult> result;
    std::exception_ptr failure;
    asio::co_spawn(io, download(endpoint, config, labels), [&](std::exception_ptr e, DownloadResult r) {
        if (e)
            failure = e;
        else
            result = std::move(r);
    });
    io.run();
    if (failure) std::rethrow_exception(failure);
    return std::move(*result);
}

}  // namespace homethru::probe
