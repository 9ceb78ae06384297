#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "homethru/probe/throughput.hpp"

namespace homethru::agent {
class TestSlot;
}

namespace homethru::probe {

// What the server observed for one test connection.
struct SessionReport {
    std::string peer;
    bool completed = false;
    std::uint64_t bytes_sent = 0;
    double elapsed_seconds = 0.0;
    std::vector<MeasurementSnapshot> snapshots;  // in send order
    std::string error;
};

struct ServerOptions {
    TestConfig test;
    // Per-connection shaping of payload bytes, in decimal Mbps.
    std::optional<double> rate_limit_mbps;
    // When set, each test waits for the slot before the WebSocket upgrade is
    // accepted; a wait beyond the slot's limit is answered with 503.
    agent::TestSlot* test_slot = nullptr;
    // Invoked on an I/O thread after each upgraded connection ends.
    std::function<void(const SessionReport&)> on_session_end;
    int io_threads = 1;
};

// Streaming download test server. Accepts WebSocket upgrades at
// /ndt/v7/download; each connection receives binary payload messages sized by
// next_payload_size, interleaved with JSON snapshot text messages, and is
// closed normally after the configured duration.
class DownloadServer {
public:
    // Binds immediately ("host:port", port 0 for ephemeral). Throws
    // StartupError if the address cannot be bound.
    DownloadServer(const std::string& bind_address, ServerOptions options);
    ~DownloadServer();

    DownloadServer(const DownloadServer&) = delete;
    DownloadServer& operator=(const DownloadServer&) = delete;

    std::uint16_t port() const;
    std::size_t active_sessions() const;
    std::uint64_t completed_sessions() const;

    // Stops accepting and tears down in-flight sessions. Idempotent.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::unique_ptr<DownloadServer> serve_download(const std::string& bind_address, ServerOptions options);

}  // namespace homethru::probe
