#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "homethru/sample.hpp"

namespace homethru::store {

inline constexpr int kSchemaVersion = 1;

struct SampleRecord {
    std::uint64_t record_id = 0;
    int schema_version = kSchemaVersion;
    ThroughputSample sample;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Every present field must match. The time range is half-open [from, to).
struct QueryFilter {
    std::optional<std::string> household_id;
    std::optional<MeasurementPath> path;
    std::optional<Timestamp> from_utc;
    std::optional<Timestamp> to_utc;
};

// Throws InvalidArgument when from >= to.
void validate(const QueryFilter& filter);
bool matches(const QueryFilter& filter, const ThroughputSample& sample);

// One JSON object per line, keys in CSV column order.
nlohmann::ordered_json to_json(const SampleRecord& record);
// record_id and schema_version are optional (0 / current version when absent).
SampleRecord record_from_json(const nlohmann::json& object);

// Append-only sample log backed by a JSON Lines file. Each append is written
// with a single write() and fdatasync()'d before the id is returned. Opening
// a log whose last line was cut short by a crash truncates that line away.
//
// Single writer, many readers: queries may run concurrently with appends and
// observe a prefix of the log.
class SampleStore {
public:
    explicit SampleStore(std::filesystem::path log_path);
    ~SampleStore();

    SampleStore(const SampleStore&) = delete;
    SampleStore& operator=(const SampleStore&) = delete;

    // Validates, persists, and returns the new record id. Throws
    // ValidationError or StorageError; a failed write leaves no partial record.
    std::uint64_t append_sample(const ThroughputSample& sample);

    // Appends all records or none. Records with record_id 0 get fresh ids;
    // nonzero ids must be strictly increasing and above last_record_id().
    std::vector<std::uint64_t> append_batch(std::span<const SampleRecord> records);

    // Ordered by timestamp, then record id.
    std::vector<SampleRecord> query_samples(const QueryFilter& filter = {}) const;

    std::vector<ThroughputSample> all_samples() const;

    std::size_t size() const;
    std::uint64_t last_record_id() const;
    const std::filesystem::path& path() const { return path_; }

    // Bytes dropped from a torn tail when the log was opened.
    std::size_t recovered_bytes() const { return recovered_bytes_; }

private:
    void load();
    void write_all(const std::string& text);

    std::filesystem::path path_;
    int fd_ = -1;
    std::size_t recovered_bytes_ = 0;
    std::uint64_t file_size_ = 0;

    std::mutex write_mutex_;
    mutable std::shared_mutex records_mutex_;
    std::vector<SampleRecord> records_;
};

}  // namespace homethru::store
