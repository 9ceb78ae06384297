#include <doctest.h>

#include <fstream>

#include <httplib.h>

#include "homethru/errors.hpp"
#include "homethru/store/api_server.hpp"
#include "support.hpp"

using namespace homethru;
using namespace homethru::store;
using nlohmann::json;
using testsupport::grid;
using testsupport::sample_at;
using testsupport::TempDir;

namespace {

ApiOptions local_options() {
    ApiOptions options;
    options.host = "127.0.0.1";
    options.port = 0;
    return options;
}

std::string sample_body(const ThroughputSample& s) { return homethru::to_json(s).dump(); }

}  // namespace

TEST_CASE("health and ingest") {
    TempDir dir;
    SampleStore store(dir / "samples.jsonl");
    std::vector<SampleRecord> ingested;
    auto options = local_options();
    options.on_ingest = [&](const std::vector<SampleRecord>& records) {
        ingested.insert(ingested.end(), records.begin(), records.end());
    };
    ApiServer api(store, options);
    httplib::Client client("127.0.0.1", api.port());

    auto health = client.Get("/api/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");
    CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

    const auto wifi = sample_at("hh", MeasurementPath::lan_wifi, grid(0), 48.5, "browser-1");
    auto created = client.Post("/api/v1/samples", sample_body(wifi), "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const auto record = json::parse(created->body);
    CHECK(record["record_id"] == 1);
    CHECK(record["path"] == "lan_wifi");
    REQUIRE(store.size() == 1);
    CHECK(store.all_samples()[0] == wifi);
    CHECK(ingested.size() == 1);

    json batch = json::array({homethru::to_json(sample_at("hh", MeasurementPath::wan_access, grid(0), 300.0)),
                              homethru::to_json(sample_at("hh", MeasurementPath::wan_access, grid(1), 310.0))});
    auto many = client.Post("/api/v1/samples", batch.dump(), "application/json");
    REQUIRE(many);
    CHECK(many->status == 201);
    CHECK(json::parse(many->body)["record_ids"] == json::array({2, 3}));

    SUBCASE("invalid bodies are rejected without writes") {
        auto bad_json = client.Post("/api/v1/samples", "{not json", "application/json");
        REQUIRE(bad_json);
        CHECK(bad_json->status == 400);

        auto inconsistent = homethru::to_json(wifi);
        inconsistent["throughput_mbps"] = 1000.0;
        auto bad_sample = client.Post("/api/v1/samples", inconsistent.dump(), "application/json");
        REQUIRE(bad_sample);
        CHECK(bad_sample->status == 400);
        CHECK(json::parse(bad_sample->body)["error"].get<std::string>().find("item 1") != std::string::npos);

        json mixed = json::array({homethru::to_json(wifi), inconsistent});
        auto partial = client.Post("/api/v1/samples", mixed.dump(), "application/json");
        REQUIRE(partial);
        CHECK(partial->status == 400);
        CHECK(store.size() == 3);
    }
    SUBCASE("unknown routes give JSON 404") {
        auto missing = client.Get("/api/v1/nothing");
        REQUIRE(missing);
        CHECK(missing->status == 404);
        CHECK(json::parse(missing->body).contains("error"));
    }
    SUBCASE("preflight") {
        auto preflight = client.Options("/api/v1/samples");
        REQUIRE(preflight);
        CHECK(preflight->status == 204);
        CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
    }
}

TEST_CASE("bearer token guards ingest") {
    TempDir dir;
    SampleStore store(dir / "samples.jsonl");
    auto options = local_options();
    options.bearer_token = "s3cret";
    ApiServer api(store, options);
    httplib::Client client("127.0.0.1", api.port());
    const auto body = sample_body(sample_at("hh", MeasurementPath::lan_wifi, grid(0), 50.0));

    auto denied = client.Post("/api/v1/samples", body, "application/json");
    REQUIRE(denied);
    CHECK(denied->status == 401);
    auto wrong = client.Post("/api/v1/samples", {{"Authorization", "Bearer nope"}}, body, "application/json");
    REQUIRE(wrong);
    CHECK(wrong->status == 401);
    auto allowed = client.Post("/api/v1/samples", {{"Authorization", "Bearer s3cret"}}, body, "application/json");
    REQUIRE(allowed);
    CHECK(allowed->status == 201);
    CHECK(store.size() == 1);

    auto read = client.Get("/api/v1/samples");
    REQUIRE(read);
    CHECK(read->status == 200);
}

TEST_CASE("default household fills anonymous browser posts") {
    TempDir dir;
    SampleStore store(dir / "samples.jsonl");
    auto options = local_options();
    options.default_household_id = "home";
    ApiServer api(store, options);
    httplib::Client client("127.0.0.1", api.port());
    auto body = homethru::to_json(sample_at("x", MeasurementPath::lan_wifi, grid(0), 50.0));
    body.erase("household_id");
    auto created = client.Post("/api/v1/samples", body.dump(), "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    CHECK(store.all_samples().at(0).household_id == "home");
}

TEST_CASE("sample queries") {
    TempDir dir;
    SampleStore store(dir / "samples.jsonl");
    store.append_sample(sample_at("a", MeasurementPath::lan_wifi, grid(2), 50.0));
    store.append_sample(sample_at("a", MeasurementPath::wan_access, grid(1), 100.0));
    store.append_sample(sample_at("b", MeasurementPath::lan_wifi, grid(0), 70.0));
    ApiServer api(store, local_options());
    httplib::Client client("127.0.0.1", api.port());

    const auto count = [&](const std::string& query) {
        auto res = client.Get("/api/v1/samples" + query);
        REQUIRE(res);
        REQUIRE(res->status == 200);
        return json::parse(res->body).size();
    };
    CHECK(count("") == 3);
    CHECK(count("?household=a") == 2);
    CHECK(count("?path=lan_wifi") == 2);
    CHECK(count("?household=a&path=lan_wifi") == 1);
    CHECK(count("?from=2021-01-01T06:00:00Z&to=2021-01-01T12:00:00Z") == 1);
    CHECK(count("?from=2030-01-01T00:00:00Z") == 0);

    auto ordered = client.Get("/api/v1/samples");
    REQUIRE(ordered);
    const auto list = json::parse(ordered->body);
    CHECK(list[0]["household_id"] == "b");
    CHECK(list[2]["record_id"] == 1);

    for (const char* bad : {"?path=ethernet", "?from=noon", "?from=2021-01-02T00:00:00Z&to=2021-01-01T00:00:00Z",
                            "?format=xml"}) {
        CAPTURE(bad);
        auto res = client.Get(std::string("/api/v1/samples") + bad);
        REQUIRE(res);
        CHECK(res->status == 400);
    }

    auto csv = client.Get("/api/v1/samples?format=csv&household=b");
    REQUIRE(csv);
    CHECK(csv->status == 200);
    CHECK(csv->body.rfind("record_id,timestamp_utc", 0) == 0);
    CHECK(std::count(csv->body.begin(), csv->body.end(), '\n') == 2);
}

TEST_CASE("analysis endpoints") {
    TempDir dir;
    SampleStore store(dir / "samples.jsonl");
    for (int k = 0; k < 24; ++k) {
        store.append_sample(sample_at("hh", MeasurementPath::wan_access, grid(k) + std::chrono::hours(1), 400.0));
        const double wifi = k == 23 ? 500.0 : 120.0;
        store.append_sample(sample_at("hh", MeasurementPath::lan_wifi, grid(k) + std::chrono::hours(2), wifi));
    }
    store.append_sample(sample_at("sparse", MeasurementPath::wan_access, grid(0), 40.0));
    store.append_sample(sample_at("sparse", MeasurementPath::lan_wifi, grid(0), 30.0));
    ApiServer api(store, local_options());
    httplib::Client client("127.0.0.1", api.port());

    auto vantage = client.Get("/api/v1/analysis/vantage");
    REQUIRE(vantage);
    REQUIRE(vantage->status == 200);
    const auto body = json::parse(vantage->body);
    CHECK(body["min_windows"] == 20);
    REQUIRE(body["vantage_points"].size() == 1);
    const auto& vp = body["vantage_points"][0];
    CHECK(vp["vantage_id"] == "hh/0");
    CHECK(vp["window_count"] == 24);
    CHECK(vp["speed_tier"] == "400-800");
    CHECK(vp["prevalence"].get<double>() == doctest::Approx(23.0 / 24.0));
    CHECK(vp["latest_window"]["is_bottleneck"] == false);

    auto loose = client.Get("/api/v1/analysis/vantage?min_windows=1");
    REQUIRE(loose);
    CHECK(json::parse(loose->body)["vantage_points"].size() == 2);
    auto one = client.Get("/api/v1/analysis/vantage?min_windows=1&household=sparse");
    REQUIRE(one);
    const auto sparse = json::parse(one->body)["vantage_points"];
    REQUIRE(sparse.size() == 1);
    CHECK(sparse[0]["latest_window"]["is_bottleneck"] == true);
    CHECK(sparse[0]["diff_sample_error_mbps"].is_null());

    auto strict = client.Get("/api/v1/analysis/vantage?min_windows=1000");
    REQUIRE(strict);
    CHECK(strict->status == 200);
    CHECK(json::parse(strict->body)["vantage_points"].empty());

    auto bad = client.Get("/api/v1/analysis/vantage?min_windows=-3");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto tiers = client.Get("/api/v1/analysis/tiers?min_windows=1");
    REQUIRE(tiers);
    REQUIRE(tiers->status == 200);
    const auto tier_body = json::parse(tiers->body);
    CHECK(tier_body["vantage_count"] == 2);
    REQUIRE(tier_body["tiers"].size() == 2);
    CHECK(tier_body["tiers"][0]["tier"] == "<50");
    CHECK(tier_body["tiers"][0]["mean_gap_mbps"].get<double>() == doctest::Approx(10.0));
}

TEST_CASE("static assets and startup errors") {
    TempDir dir;
    std::filesystem::create_directories(dir / "web");
    std::ofstream(dir / "web" / "index.html") << "<html>speed test</html>";
    SampleStore store(dir / "samples.jsonl");
    auto options = local_options();
    options.web_root = dir / "web";
    ApiServer api(store, options);
    httplib::Client client("127.0.0.1", api.port());
    auto index = client.Get("/");
    REQUIRE(index);
    CHECK(index->status == 200);
    CHECK(index->body == "<html>speed test</html>");
    auto health = client.Get("/api/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);

    auto clash = local_options();
    clash.port = api.port();
    CHECK_THROWS_AS(ApiServer(store, clash), StartupError);

    auto missing_root = local_options();
    missing_root.web_root = dir / "nope";
    CHECK_THROWS_AS(ApiServer(store, missing_root), StartupError);
}
