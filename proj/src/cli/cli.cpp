#include "homethru/cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "homethru/agent/agent.hpp"
#include "homethru/agent/config.hpp"
#include "homethru/analysis/cohort.hpp"
#include "homethru/analysis/report.hpp"
#include "homethru/errors.hpp"
#include "homethru/fileio.hpp"
#include "homethru/log.hpp"
#include "homethru/probe/download_client.hpp"
#include "homethru/probe/download_server.hpp"
#include "homethru/store/record_io.hpp"
#include "homethru/store/sample_store.hpp"
#include "homethru/synth/cohort_generator.hpp"

namespace homethru::cli {

namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_shutdown{false};

static_assert(std::atomic<bool>::is_always_lock_free);

extern "C" void on_signal(int) { g_shutdown.store(true); }

// Bad flag values discovered after parsing; reported like parse errors.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void wait_for_shutdown() {
    while (!g_shutdown.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

store::RecordFormat format_for(const std::optional<std::string>& flag, const fs::path& file) {
    if (flag) return store::parse_record_format(*flag);
    return file.extension() == ".csv" ? store::RecordFormat::csv : store::RecordFormat::jsonl;
}

// Opening a missing log would create it; read-only commands refuse instead.
std::unique_ptr<store::SampleStore> open_existing_store(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw StorageError(fmt::format("sample store {} not found", path.string()));
    return std::make_unique<store::SampleStore>(path);
}

std::optional<Timestamp> parse_time_flag(const std::optional<std::string>& text, const char* flag) {
    if (!text) return std::nullopt;
    try {
        return parse_rfc3339(*text);
    } catch (const InvalidArgument& e) {
        throw UsageError(fmt::format("{}: {}", flag, e.what()));
    }
}

struct AnalyzeFlags {
    std::string store_path;
    double window_hours = 6.0;
    std::size_t min_windows = analysis::kDefaultMinWindows;
    double ratio_threshold = 1.5;
    std::size_t span_windows = 28;
    std::size_t sustain_windows = 28;
    double rare_max = 0.1;
    double frequent_min = 0.8;
    std::optional<std::string> tiers_file;
};

void add_analysis_flags(CLI::App& cmd, AnalyzeFlags& f) {
    cmd.add_option("--store", f.store_path, "Sample log (JSONL)")->required();
    cmd.add_option("--window-hours", f.window_hours, "Resampling window length in hours")->capture_default_str();
    cmd.add_option("--min-windows", f.min_windows, "Coincident windows a vantage point needs")->capture_default_str();
    cmd.add_option("--ratio-threshold", f.ratio_threshold, "Access level ratio that marks a plan change")
        ->capture_default_str();
    cmd.add_option("--span-windows", f.span_windows, "Trailing windows compared when detecting a change")
        ->capture_default_str();
    cmd.add_option("--sustain-windows", f.sustain_windows, "Windows the new access level must persist")
        ->capture_default_str();
    cmd.add_option("--rare-max", f.rare_max, "Prevalence at or below this is rare")->capture_default_str();
    cmd.add_option("--frequent-min", f.frequent_min, "Prevalence at or above this is frequent")->capture_default_str();
    cmd.add_option("--tiers", f.tiers_file, "JSON object mapping vantage or household ids to tier labels");
}

analysis::TierMetadata load_tiers(const fs::path& file) {
    const auto doc = nlohmann::json::parse(read_file(file), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw InvalidArgument(fmt::format("{}: expected a JSON object of id to tier label", file.string()));
    analysis::TierMetadata tiers;
    for (const auto& [id, label] : doc.items()) {
        if (!label.is_string()) throw InvalidArgument(fmt::format("{}: tier for '{}' is not a string", file.string(), id));
        tiers[id] = analysis::parse_speed_tier(label.get<std::string>());
    }
    return tiers;
}

analysis::AnalysisOptions analysis_options(const AnalyzeFlags& f) {
    analysis::AnalysisOptions options;
    const double seconds = f.window_hours * 3600.0;
    if (!(seconds >= 1.0) || !std::isfinite(seconds) || seconds != std::round(seconds))
        throw UsageError(fmt::format("--window-hours {} is not a positive whole number of seconds", f.window_hours));
    options.window_seconds = static_cast<std::int64_t>(seconds);
    options.min_windows = f.min_windows;
    options.change.ratio_threshold = f.ratio_threshold;
    options.change.span_windows = f.span_windows;
    options.change.sustain_windows = f.sustain_windows;
    options.thresholds = {f.rare_max, f.frequent_min};
    try {
        analysis::validate(options);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (f.tiers_file) options.tier_metadata = load_tiers(*f.tiers_file);
    return options;
}

analysis::CohortAnalysis run_analysis(const AnalyzeFlags& f, const analysis::AnalysisOptions& options) {
    const auto store = open_existing_store(f.store_path);
    const auto samples = store->all_samples();
    if (samples.empty()) throw InsufficientData(fmt::format("insufficient data: {} holds no samples", f.store_path));
    return analysis::analyze_cohort(samples, options);
}

std::string sample_json_line(const ThroughputSample& sample) { return to_json(sample).dump() + "\n"; }

}  // namespace

void request_shutdown() { g_shutdown.store(true); }

void install_signal_handlers() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Home network throughput measurement: probes, agent, sample store and bottleneck analysis",
                 "homethru"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "Log verbosity on standard error")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
        ->capture_default_str();

    // serve
    auto* serve = app.add_subcommand("serve", "Run the streaming download test server until interrupted");
    std::string serve_bind = "0.0.0.0:4443";
    std::optional<double> serve_rate;
    double serve_duration = 10.0;
    serve->add_option("--bind", serve_bind, "Listen address host:port")->capture_default_str();
    serve->add_option("--rate-limit-mbps", serve_rate, "Pace every test at this rate")->check(CLI::PositiveNumber);
    serve->add_option("--duration", serve_duration, "Seconds each test streams")->capture_default_str();

    // test
    auto* test = app.add_subcommand("test", "Run one download test and print the sample as JSON");
    std::string test_endpoint;
    std::string test_path = "wan_access";
    std::string test_household = "cli";
    std::string test_device = "cli";
    double test_duration = 10.0;
    std::optional<std::string> test_store;
    test->add_option("--endpoint", test_endpoint, "Server address host:port or ws:// URL")->required();
    test->add_option("--path", test_path, "Measurement path label")
        ->check(CLI::IsMember({"wan_access", "lan_wifi"}))
        ->capture_default_str();
    test->add_option("--household", test_household, "Household id recorded in the sample")->capture_default_str();
    test->add_option("--device", test_device, "Device id recorded in the sample")->capture_default_str();
    test->add_option("--duration", test_duration, "Seconds to stream")->capture_default_str();
    test->add_option("--store", test_store, "Also append the sample to this log");

    // agent
    auto* agent_cmd = app.add_subcommand("agent", "Run the measurement agent until interrupted");
    std::optional<std::string> agent_config_file;
    std::map<std::string, std::optional<std::string>> agent_overrides = {
        {"household_id", {}}, {"wan_endpoint", {}}, {"store_path", {}}, {"lan_bind", {}},
        {"api_bind", {}},     {"web_root", {}},     {"api_token", {}},
    };
    agent_cmd->add_option("--config", agent_config_file, "INI file; HOMETHRU_<KEY> variables override it");
    agent_cmd->add_option("--household", agent_overrides["household_id"], "Household id");
    agent_cmd->add_option("--wan-endpoint", agent_overrides["wan_endpoint"], "Remote test server host:port");
    agent_cmd->add_option("--store", agent_overrides["store_path"], "Sample log path");
    agent_cmd->add_option("--lan-bind", agent_overrides["lan_bind"], "LAN test server address");
    agent_cmd->add_option("--api-bind", agent_overrides["api_bind"], "HTTP API address");
    agent_cmd->add_option("--web-root", agent_overrides["web_root"], "Directory of browser client assets");
    agent_cmd->add_option("--api-token", agent_overrides["api_token"], "Bearer token required for ingest");

    // import
    auto* import_cmd = app.add_subcommand("import", "Append records from a JSONL or CSV file to a sample log");
    std::string import_store;
    std::string import_input;
    std::optional<std::string> import_format;
    import_cmd->add_option("--store", import_store, "Sample log")->required();
    import_cmd->add_option("--input,input", import_input, "File to import")->required();
    import_cmd->add_option("--format", import_format, "jsonl or csv (default: by extension)")
        ->check(CLI::IsMember({"jsonl", "csv"}));

    // export
    auto* export_cmd = app.add_subcommand("export", "Write matching records as JSONL or CSV");
    std::string export_store;
    std::optional<std::string> export_output;
    std::optional<std::string> export_format;
    std::optional<std::string> export_household;
    std::optional<std::string> export_path;
    std::optional<std::string> export_from;
    std::optional<std::string> export_to;
    export_cmd->add_option("--store", export_store, "Sample log")->required();
    export_cmd->add_option("--output", export_output, "Destination file (default: standard output)");
    export_cmd->add_option("--format", export_format, "jsonl or csv (default: by extension, else jsonl)")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    export_cmd->add_option("--household", export_household, "Only this household");
    export_cmd->add_option("--path", export_path, "Only this measurement path")
        ->check(CLI::IsMember({"wan_access", "lan_wifi"}));
    export_cmd->add_option("--from", export_from, "Inclusive start, RFC 3339");
    export_cmd->add_option("--to", export_to, "Exclusive end, RFC 3339");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Run the bottleneck analysis and write report files");
    AnalyzeFlags analyze_flags;
    std::string analyze_out = "report";
    add_analysis_flags(*analyze, analyze_flags);
    analyze->add_option("--out", analyze_out, "Output directory")->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "Run the analysis and print the summary report");
    AnalyzeFlags report_flags;
    bool report_json = false;
    add_analysis_flags(*report, report_flags);
    report->add_flag("--json", report_json, "Print report.json instead of the text table");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort as an import-ready sample file");
    std::uint64_t synth_seed = 1;
    std::optional<std::string> synth_spec;
    std::size_t synth_households = 52;
    std::size_t synth_changes = 13;
    std::string synth_out;
    std::optional<std::string> synth_format;
    std::optional<std::string> synth_tiers_out;
    synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
    auto* spec_opt = synth->add_option("--spec", synth_spec, "Cohort spec JSON file");
    synth->add_option("--households", synth_households, "Household count for the default cohort")
        ->capture_default_str()
        ->excludes(spec_opt);
    synth->add_option("--changes", synth_changes, "Households with a mid-period plan change")
        ->capture_default_str()
        ->excludes(spec_opt);
    synth->add_option("--out", synth_out, "Output file")->required();
    synth->add_option("--format", synth_format, "jsonl or csv (default: by extension, else jsonl)")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    synth->add_option("--tiers-out", synth_tiers_out, "Also write the true tier of every vantage point as JSON");

    // Help for the subcommand being run, or the top-level help.
    auto usage = [&] {
        const auto parsed = app.get_subcommands();
        return parsed.empty() ? app.help() : parsed.front()->help();
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << usage();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << usage();
        return kExitUsage;
    }

    logger().set_level(spdlog::level::from_str(log_level));
    try {
        if (*serve) {
            probe::ServerOptions options;
            options.test.duration_seconds = serve_duration;
            try {
                probe::validate(options.test);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            options.rate_limit_mbps = serve_rate;
            g_shutdown.store(false);
            auto server = probe::serve_download(serve_bind, options);
            out << fmt::format("listening on port {}\n", server->port()) << std::flush;
            wait_for_shutdown();
            server->stop();
            return kExitOk;
        }

        if (*test) {
            probe::TestConfig config;
            config.duration_seconds = test_duration;
            try {
                probe::validate(config);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            const auto endpoint = probe::parse_endpoint(test_endpoint);
            const probe::TestLabels labels{test_household, test_device, parse_measurement_path(test_path), "ndt7"};
            // Open the store first so a bad path fails before the test runs.
            std::unique_ptr<store::SampleStore> store;
            if (test_store) store = std::make_unique<store::SampleStore>(*test_store);
            const auto result = probe::run_download_test(endpoint, config, labels);
            if (store) store->append_sample(result.sample);
            out << sample_json_line(result.sample);
            return kExitOk;
        }

        if (*agent_cmd) {
            auto config = agent::load_agent_config(agent_config_file);
            for (const auto& [key, value] : agent_overrides)
                if (value) agent::set_config_value(config, key, *value);
            try {
                agent::validate(config);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            store::SampleStore store(config.store_path);
            g_shutdown.store(false);
            agent::Agent running(config, store);
            out << fmt::format("agent running: lan port {}, api port {}\n", running.lan_port(), running.api_port())
                << std::flush;
            wait_for_shutdown();
            running.stop();
            return kExitOk;
        }

        if (*import_cmd) {
            const auto format = format_for(import_format, import_input);
            const auto data = read_file(import_input);
            store::SampleStore store(import_store);
            const auto count = store::import_records(store, data, format);
            out << fmt::format("imported {} records into {}\n", count, import_store);
            return kExitOk;
        }

        if (*export_cmd) {
            store::QueryFilter filter;
            filter.household_id = export_household;
            if (export_path) filter.path = parse_measurement_path(*export_path);
            filter.from_utc = parse_time_flag(export_from, "--from");
            filter.to_utc = parse_time_flag(export_to, "--to");
            try {
                store::validate(filter);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            const auto format = format_for(export_format, export_output.value_or(""));
            const auto store = open_existing_store(export_store);
            const auto text = store::export_records(*store, filter, format);
            if (export_output)
                write_file_atomic(*export_output, text);
            else
                out << text;
            return kExitOk;
        }

        if (*analyze) {
            const auto options = analysis_options(analyze_flags);
            const auto result = run_analysis(analyze_flags, options);
            const auto written = analysis::write_report_files(analyze_out, result.report, options);
            out << fmt::format("{} vantage points from {} households; wrote {} files to {}\n",
                               result.report.vantage_points_retained, result.report.households_retained,
                               written.size(), analyze_out);
            return kExitOk;
        }

        if (*report) {
            const auto options = analysis_options(report_flags);
            const auto result = run_analysis(report_flags, options);
            if (report_json)
                out << analysis::report_to_json(result.report, options).dump(2) << "\n";
            else
                out << analysis::report_to_text(result.report, options);
            return kExitOk;
        }

        if (*synth) {
            synth::CohortSpec spec;
            try {
                if (synth_spec) {
                    const auto doc = nlohmann::json::parse(read_file(*synth_spec), nullptr, false);
                    if (doc.is_discarded()) throw InvalidArgument(fmt::format("{} is not valid JSON", *synth_spec));
                    spec = synth::cohort_spec_from_json(doc);
                } else {
                    spec = synth::default_cohort_spec(synth_households, synth_changes);
                }
                synth::validate(spec);
            } catch (const InvalidArgument& e) {
                throw UsageError(fmt::format("invalid cohort spec: {}", e.what()));
            }
            const auto samples = synth::generate_cohort(spec, synth_seed);
            std::vector<store::SampleRecord> records;
            records.reserve(samples.size());
            for (const auto& sample : samples) records.push_back({records.size() + 1, store::kSchemaVersion, sample});
            const auto text = store::format_records(records, format_for(synth_format, synth_out));

            if (synth_tiers_out) write_file_atomic(*synth_tiers_out, synth::tier_metadata(spec).dump(2) + "\n");
            try {
                write_file_atomic(synth_out, text);
            } catch (...) {
                if (synth_tiers_out) {
                    std::error_code ec;
                    fs::remove(*synth_tiers_out, ec);
                }
                throw;
            }
            out << fmt::format("wrote {} samples for {} households to {}\n", records.size(), spec.households.size(),
                               synth_out);
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << usage();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace homethru::cli
