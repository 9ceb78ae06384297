#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "homethru/analysis/cohort.hpp"
#include "homethru/store/sample_store.hpp"

namespace homethru::store {

struct ApiOptions {
    std::string host = "0.0.0.0";
    std::uint16_t port = 8080;  // 0 picks a free port
    // When set, POST requests must carry "Authorization: Bearer <token>".
    std::optional<std::string> bearer_token;
    // Static files served at "/".
    std::optional<std::filesystem::path> web_root;
    // Filled into posted samples that omit household_id.
    std::optional<std::string> default_household_id;
    // Defaults for the analysis endpoints; min_windows is overridable per request.
    analysis::AnalysisOptions analysis;
    std::size_t max_body_bytes = 4 * 1024 * 1024;
    std::size_t worker_threads = 4;
    // Called after each accepted POST with the stored records.
    std::function<void(const std::vector<SampleRecord>&)> on_ingest;
};

// JSON HTTP API over a SampleStore:
//   GET  /api/v1/health
//   POST /api/v1/samples                one sample object or an array of them
//   GET  /api/v1/samples                ?household=&path=&from=&to=&format=json|jsonl|csv
//   GET  /api/v1/analysis/vantage       ?household=&min_windows=
//   GET  /api/v1/analysis/tiers         ?min_windows=
// Responses carry permissive CORS headers so a browser page on another
// origin can use the API.
class ApiServer {
public:
    // Binds immediately and serves on a background thread. Throws StartupError.
    ApiServer(SampleStore& store, ApiOptions options);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    std::uint16_t port() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace homethru::store
