#include "homethru/store/api_server.hpp"

#include <charconv>
#include <chrono>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "homethru/analysis/report.hpp"
#include "homethru/errors.hpp"
#include "homethru/log.hpp"
#include "homethru/store/record_io.hpp"

namespace homethru::store {

namespace {

using nlohmann::ordered_json;

void send_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view message) {
    send_json(res, status, ordered_json{{"error", message}});
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

QueryFilter filter_from(const httplib::Request& req) {
    QueryFilter filter;
    filter.household_id = param(req, "household");
    if (const auto path = param(req, "path")) filter.path = parse_measurement_path(*path);
    if (const auto from = param(req, "from")) filter.from_utc = parse_rfc3339(*from);
    if (const auto to = param(req, "to")) filter.to_utc = parse_rfc3339(*to);
    validate(filter);
    return filter;
}

analysis::AnalysisOptions analysis_options_from(const httplib::Request& req, analysis::AnalysisOptions options) {
    if (const auto text = param(req, "min_windows")) {
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), value);
        if (ec != std::errc{} || ptr != text->data() + text->size() || value == 0)
            throw InvalidArgument(fmt::format("min_windows must be a positive integer, got '{}'", *text));
        options.min_windows = value;
    }
    return options;
}

}  // namespace

struct ApiServer::Impl {
    SampleStore& store;
    ApiOptions options;
    httplib::Server server;
    std::thread thread;
    int bound_port = 0;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    Impl(SampleStore& s, ApiOptions o) : store(s), options(std::move(o)) {}

    // Wraps a handler so library errors map to HTTP statuses.
    template <typename F>
    httplib::Server::Handler guarded(F handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const InvalidArgument& e) {
                send_error(res, 400, e.what());
            } catch (const ValidationError& e) {
                send_error(res, 400, e.what());
            } catch (const StorageError& e) {
                logger().error("event=api_storage_error path={} error=\"{}\"", req.path, e.what());
                send_error(res, 503, e.what());
            } catch (const std::exception& e) {
                logger().error("event=api_error path={} error=\"{}\"", req.path, e.what());
                send_error(res, 500, e.what());
            }
        };
    }

    bool authorized(const httplib::Request& req) const {
        if (!options.bearer_token) return true;
        return req.get_header_value("Authorization") == "Bearer " + *options.bearer_token;
    }

    void health(const httplib::Request&, httplib::Response& res) {
        ordered_json body;
        body["status"] = "ok";
        body["records"] = store.size();
        body["last_record_id"] = store.last_record_id();
        body["uptime_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        send_json(res, 200, body);
    }

    void post_samples(const httplib::Request& req, httplib::Response& res) {
        if (!authorized(req)) {
            res.set_header("WWW-Authenticate", "Bearer");
            send_error(res, 401, "missing or invalid bearer token");
            return;
        }
        const auto doc = nlohmann::json::parse(req.body, nullptr, false);
        if (doc.is_discarded()) throw ValidationError("request body is not valid JSON");
        if (!doc.is_object() && !doc.is_array()) throw ValidationError("expected a sample object or an array");

        const auto items = doc.is_array() ? doc : nlohmann::json::array({doc});
        std::vector<SampleRecord> records;
        for (std::size_t i = 0; i < items.size(); ++i) {
            auto item = items[i];
            if (!item.is_object()) throw ValidationError(fmt::format("item {}: expected an object", i + 1));
            if (options.default_household_id && !item.contains("household_id"))
                item["household_id"] = *options.default_household_id;
            try {
                SampleRecord record;
                record.sample = sample_from_json(item);
                validate(record.sample);
                records.push_back(std::move(record));
            } catch (const Error& e) {
                throw ValidationError(fmt::format("item {}: {}", i + 1, e.what()));
            }
        }
        const auto ids = store.append_batch(records);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            records[i].record_id = ids[i];
            const auto& s = records[i].sample;
            logger().info("event=sample_ingested record_id={} household={} path={} mbps={:.3f}", ids[i],
                          s.household_id, to_string(s.path), s.throughput_mbps);
        }
        if (options.on_ingest) options.on_ingest(records);

        ordered_json body;
        if (doc.is_object()) {
            body = to_json(records.front());
        } else {
            body["record_ids"] = ids;
        }
        send_json(res, 201, body);
    }

    void get_samples(const httplib::Request& req, httplib::Response& res) {
        const auto filter = filter_from(req);
        const auto format = param(req, "format").value_or("json");
        const auto records = store.query_samples(filter);
        if (format == "json") {
            auto body = ordered_json::array();
            for (const auto& r : records) body.push_back(to_json(r));
            send_json(res, 200, body);
            return;
        }
        const auto record_format = parse_record_format(format);
        res.status = 200;
        res.set_content(format_records(records, record_format),
                        record_format == RecordFormat::csv ? "text/csv" : "application/x-ndjson");
    }

    std::vector<analysis::VantageAnalysis> vantage_analysis(const httplib::Request& req,
                                                           const analysis::AnalysisOptions& opts) {
        QueryFilter filter;
        filter.household_id = param(req, "household");
        std::vector<ThroughputSample> samples;
        for (auto& record : store.query_samples(filter)) samples.push_back(std::move(record.sample));
        return analysis::analyze_vantage_points(samples, opts);
    }

    void get_vantage(const httplib::Request& req, httplib::Response& res) {
        const auto opts = analysis_options_from(req, options.analysis);
        const auto vantage = vantage_analysis(req, opts);
        auto list = ordered_json::array();
        for (const auto& v : vantage) {
            auto j = analysis::vantage_stats_to_json(v.stats);
            j["latest_window"] = analysis::window_to_json(v.segment.windows.back());
            list.push_back(std::move(j));
        }
        ordered_json body;
        body["window_seconds"] = opts.window_seconds;
        body["min_windows"] = opts.min_windows;
        body["vantage_points"] = std::move(list);
        send_json(res, 200, body);
    }

    void get_tiers(const httplib::Request& req, httplib::Response& res) {
        const auto opts = analysis_options_from(req, options.analysis);
        std::vector<analysis::VantageStats> stats;
        for (auto& v : vantage_analysis(req, opts)) stats.push_back(std::move(v.stats));
        auto tiers = ordered_json::array();
        for (const auto& t : analysis::tier_summary(stats)) tiers.push_back(analysis::tier_summary_to_json(t));
        ordered_json body;
        body["min_windows"] = opts.min_windows;
        body["vantage_count"] = stats.size();
        body["tiers"] = std::move(tiers);
        send_json(res, 200, body);
    }

    void install_routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.set_payload_max_length(options.max_body_bytes);
        // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which
        // would let a second server silently share an occupied port.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        const auto workers = options.worker_threads;
        server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };

        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.Get("/api/v1/health", guarded([this](const auto& req, auto& res) { health(req, res); }));
        server.Post("/api/v1/samples", guarded([this](const auto& req, auto& res) { post_samples(req, res); }));
        server.Get("/api/v1/samples", guarded([this](const auto& req, auto& res) { get_samples(req, res); }));
        server.Get("/api/v1/analysis/vantage", guarded([this](const auto& req, auto& res) { get_vantage(req, res); }));
        server.Get("/api/v1/analysis/tiers", guarded([this](const auto& req, auto& res) { get_tiers(req, res); }));
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (res.body.empty()) {
                const auto status = res.status;
                send_error(res, status, status == 404 ? fmt::format("no route for {}", req.path) : "request failed");
            }
        });
        if (options.web_root) {
            if (!server.set_mount_point("/", options.web_root->string()))
                throw StartupError(fmt::format("web root {} is not a directory", options.web_root->string()));
        }
    }
};

ApiServer::ApiServer(SampleStore& store, ApiOptions options) : impl_(std::make_unique<Impl>(store, std::move(options))) {
    impl_->install_routes();
    auto& opts = impl_->options;
    if (opts.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(opts.host);
        if (impl_->bound_port <= 0) throw StartupError(fmt::format("cannot bind API server on {}", opts.host));
    } else {
        if (!impl_->server.bind_to_port(opts.host, opts.port))
            throw StartupError(fmt::format("cannot bind API server on {}:{}", opts.host, opts.port));
        impl_->bound_port = opts.port;
    }
    impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    logger().info("event=api_listening host={} port={}", opts.host, impl_->bound_port);
}

ApiServer::~ApiServer() { stop(); }

std::uint16_t ApiServer::port() const { return static_cast<std::uint16_t>(impl_->bound_port); }

void ApiServer::stop() {
    if (!impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

}  // namespace homethru::store
