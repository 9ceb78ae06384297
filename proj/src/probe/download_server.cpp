#include "homethru/probe/download_server.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "homethru/agent/test_slot.hpp"
#include "homethru/errors.hpp"
#include "homethru/log.hpp"
#include "homethru/probe/endpoint.hpp"
#include "homethru/probe/token_bucket.hpp"

namespace homethru::probe {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using SteadyClock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kChunkBytes = 64 * 1024;
constexpr auto kAdmissionPoll = std::chrono::milliseconds(20);
constexpr auto kRequestTimeout = std::chrono::seconds(30);

std::vector<std::uint8_t> make_filler() {
    std::vector<std::uint8_t> bytes(kChunkBytes);
    std::mt19937 rng(0x6e647437);
    std::uniform_int_distribution<int> dist(0, 255);
    std::generate(bytes.begin(), bytes.end(), [&] { return static_cast<std::uint8_t>(dist(rng)); });
    return bytes;
}

double seconds_since(SteadyClock::time_point start) {
    return std::chrono::duration<double>(SteadyClock::now() - start).count();
}

}  // namespace

struct DownloadServer::Impl {
    ServerOptions options;
    const std::vector<std::uint8_t> filler = make_filler();
    std::atomic<std::size_t> active{0};
    std::atomic<std::uint64_t> completed{0};
    std::atomic<bool> stopping{false};

    asio::io_context io;
    tcp::acceptor acceptor{io};
    std::vector<std::thread> threads;

    asio::awaitable<void> accept_loop();
    asio::awaitable<void> session(tcp::socket socket);
    asio::awaitable<void> stream_test(websocket::stream<beast::tcp_stream>& ws, SessionReport& report);
};

asio::awaitable<void> DownloadServer::Impl::accept_loop() {
    while (acceptor.is_open()) {
        tcp::socket socket(asio::make_strand(io));
        boost::system::error_code ec;
        co_await acceptor.async_accept(socket, asio::redirect_error(asio::use_awaitable, ec));
        if (ec) {
            if (ec == asio::error::operation_aborted || !acceptor.is_open()) co_return;
            logger().warn("event=accept_failed error=\"{}\"", ec.message());
            continue;
        }
        auto executor = socket.get_executor();
        asio::co_spawn(executor, session(std::move(socket)), asio::detached);
    }
}

asio::awaitable<void> DownloadServer::Impl::session(tcp::socket socket) {
    ++active;
    struct Leave {
        std::atomic<std::size_t>& counter;
        ~Leave() { --counter; }
    } leave{active};

    SessionReport report;
    boost::system::error_code peer_ec;
    const auto remote = socket.remote_endpoint(peer_ec);
    report.peer = peer_ec ? std::string("unknown") : fmt::format("{}:{}", remote.address().to_string(), remote.port());

    bool upgraded = false;
    std::optional<agent::Permit> permit;
    try {
        beast::tcp_stream stream(std::move(socket));
        beast::flat_buffer buffer;
        http::request<http::string_body> request;
        stream.expires_after(kRequestTimeout);
        co_await http::async_read(stream, buffer, request, asio::use_awaitable);

        const std::string_view target(request.target().data(), request.target().size());
        const auto path = target.substr(0, target.find('?'));

        const auto reply = [&](http::status status, std::string body) -> asio::awaitable<void> {
            http::response<http::string_body> response{status, request.version()};
            response.set(http::field::content_type, "text/plain");
            response.keep_alive(false);
            response.body() = std::move(body);
            response.prepare_payload();
            co_await http::async_write(stream, response, asio::use_awaitable);
            stream.socket().shutdown(tcp::socket::shutdown_send, peer_ec);
        };

        if (path != kDownloadPath) {
            co_await reply(http::status::not_found, "not found\n");
            co_return;
        }
        if (!websocket::is_upgrade(request)) {
            co_await reply(http::status::upgrade_required, "websocket upgrade required\n");
            co_return;
        }

        if (options.test_slot != nullptr) {
            auto ticket = options.test_slot->request(agent::TestKind::lan_test);
            asio::steady_timer poll(co_await asio::this_coro::executor);
            while (true) {
                if (auto claimed = ticket.try_claim()) {
                    permit = std::move(*claimed);
                    break;
                }
                if (ticket.expired() || stopping) {
                    ticket.cancel();
                    logger().warn("event=lan_test_rejected peer={} reason=busy", report.peer);
                    stream.expires_after(kRequestTimeout);
                    co_await reply(http::status::service_unavailable, "test slot busy\n");
                    co_return;
                }
                poll.expires_after(kAdmissionPoll);
                co_await poll.async_wait(asio::use_awaitable);
            }
        }

        const bool offered_subprotocol =
            beast::string_view(request[http::field::sec_websocket_protocol]).find(kSubprotocol.data()) !=
            beast::string_view::npos;

        stream.expires_never();
        websocket::stream<beast::tcp_stream> ws(std::move(stream));
        ws.set_option(websocket::stream_base::timeout{kRequestTimeout, websocket::stream_base::none(), false});
        ws.set_option(websocket::stream_base::decorator([offered_subprotocol](websocket::response_type& response) {
            response.set(http::field::server, "homethru");
            if (offered_subprotocol)
                response.set(http::field::sec_websocket_protocol, std::string(kSubprotocol));
        }));
        co_await ws.async_accept(request, asio::use_awaitable);
        upgraded = true;

        // Bounds a stalled peer: the stream is torn down well after the test
        // should have finished.
        asio::steady_timer watchdog(co_await asio::this_coro::executor);
        watchdog.expires_after(std::chrono::duration_cast<SteadyClock::duration>(
            std::chrono::duration<double>(options.test.duration_seconds * 2 + 30)));
        watchdog.async_wait([&ws](boost::system::error_code ec) {
            if (!ec) beast::get_lowest_layer(ws).close();
        });

        co_await stream_test(ws, report);
        watchdog.cancel();
        report.completed = true;
        ++completed;
        logger().info("event=download_complete peer={} bytes={} elapsed_s={:.3f}", report.peer, report.bytes_sent,
                      report.elapsed_seconds);
    } catch (const boost::system::system_error& e) {
        report.error = e.code().message();
    } catch (const std::exception& e) {
        report.error = e.what();
    }

    permit.reset();
    if (!upgraded) co_return;
    if (!report.completed)
        logger().warn("event=download_partial peer={} bytes={} elapsed_s={:.3f} error=\"{}\"", report.peer,
                      report.bytes_sent, report.elapsed_seconds, report.error);
    if (options.on_session_end) {
        try {
            options.on_session_end(report);
        } catch (const std::exception& e) {
            logger().error("event=session_callback_failed error=\"{}\"", e.what());
        }
    }
}

asio::awaitable<void> DownloadServer::Impl::stream_test(websocket::stream<beast::tcp_stream>& ws,
                                                        SessionReport& report) {
    const TestConfig& config = options.test;
    asio::steady_timer pacing(co_await asio::this_coro::executor);
    const auto start = SteadyClock::now();

    std::optional<TokenBucket> bucket;
    if (options.rate_limit_mbps)
        bucket.emplace(TokenBucket::mbps_to_bytes_per_second(*options.rate_limit_mbps),
                       static_cast<double>(kChunkBytes), start);

    const auto send_snapshot = [&](double elapsed) -> asio::awaitable<void> {
        if (!report.snapshots.empty() && elapsed <= report.snapshots.back().elapsed_seconds) co_return;
        const MeasurementSnapshot snapshot{elapsed, report.bytes_sent};
        const auto text = format_snapshot(snapshot);
        ws.text(true);
        co_await ws.async_write(asio::buffer(text), asio::use_awaitable);
        report.snapshots.push_back(snapshot);
    };

    std::uint64_t payload = config.initial_payload_bytes;
    double next_snapshot = config.snapshot_interval_seconds;
    while (!stopping) {
        double elapsed = seconds_since(start);
        report.elapsed_seconds = elapsed;
        if (elapsed >= config.duration_seconds) break;
        if (elapsed >= next_snapshot) {
            co_await send_snapshot(elapsed);
            next_snapshot = (std::floor(elapsed / config.snapshot_interval_seconds) + 1) *
                            config.snapshot_interval_seconds;
        }

        payload = next_payload_size(payload, report.bytes_sent, config);
        ws.binary(true);
        std::uint64_t remaining = payload;
        while (remaining > 0) {
            const auto chunk = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, kChunkBytes));
            if (bucket) {
                const auto delay = bucket->reserve(chunk, SteadyClock::now());
                if (delay > SteadyClock::duration::zero()) {
                    pacing.expires_after(delay);
                    co_await pacing.async_wait(asio::use_awaitable);
                }
            }
            remaining -= chunk;
            co_await ws.async_write_some(remaining == 0, asio::buffer(filler.data(), chunk), asio::use_awaitable);
            report.bytes_sent += chunk;
        }
    }

    report.elapsed_seconds = seconds_since(start);
    co_await send_snapshot(report.elapsed_seconds);
    co_await ws.async_close(websocket::close_code::normal, asio::use_awaitable);
}

DownloadServer::DownloadServer(const std::string& bind_address, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
    validate(options.test);
    impl_->options = std::move(options);

    Endpoint endpoint;
    try {
        endpoint = parse_endpoint(bind_address);
    } catch (const InvalidArgument& e) {
        throw StartupError(e.what());
    }

    boost::system::error_code ec;
    tcp::resolver resolver(impl_->io);
    const auto resolved = resolver.resolve(endpoint.host, std::to_string(endpoint.port),
                                           tcp::resolver::passive, ec);
    if (ec || resolved.empty())
        throw StartupError(fmt::format("cannot resolve bind address {}: {}", bind_address, ec.message()));
    const tcp::endpoint local = resolved.begin()->endpoint();

    auto& acceptor = impl_->acceptor;
    if (acceptor.open(local.protocol(), ec); ec)
        throw StartupError(fmt::format("cannot open socket for {}: {}", bind_address, ec.message()));
    acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (acceptor.bind(local, ec); ec)
        throw StartupError(fmt::format("cannot bind {}: {}", bind_address, ec.message()));
    if (acceptor.listen(asio::socket_base::max_listen_connections, ec); ec)
        throw StartupError(fmt::format("cannot listen on {}: {}", bind_address, ec.message()));

    asio::co_spawn(impl_->io, impl_->accept_loop(), asio::detached);
    const int threads = std::max(1, impl_->options.io_threads);
    for (int i = 0; i < threads; ++i) impl_->threads.emplace_back([this] { impl_->io.run(); });
    logger().info("event=download_server_listening address={}:{}", endpoint.host, port());
}

DownloadServer::~DownloadServer() { stop(); }

std::uint16_t DownloadServer::port() const {
    boost::system::error_code ec;
    const auto local = impl_->acceptor.local_endpoint(ec);
    return ec ? 0 : local.port();
}

std::size_t DownloadServer::active_sessions() const { return impl_->active.load(); }

std::uint64_t DownloadServer::completed_sessions() const { return impl_->completed.load(); }

void DownloadServer::stop() {
    if (impl_->stopping.exchange(true)) return;
    impl_->io.stop();
    for (auto& t : impl_->threads)
        if (t.joinable()) t.join();
    boost::system::error_code ec;
    impl_->acceptor.close(ec);
}

std::unique_ptr<DownloadServer> serve_download(const std::string& bind_address, ServerOptions options) {
    return std::make_unique<DownloadServer>(bind_address, std::move(options));
}

}  // namespace homethru::probe
