#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "homethru/store/sample_store.hpp"

namespace homethru::store {

enum class RecordFormat { jsonl, csv };

RecordFormat parse_record_format(std::string_view text);

// CSV column order; also the JSONL key order.
inline constexpr std::string_view kCsvHeader =
    "record_id,timestamp_utc,household_id,device_id,path,throughput_mbps,duration_seconds,bytes_transferred,tool,"
    "schema_version";

// An empty CSV export still carries the header; an empty JSONL export is empty.
std::string format_records(std::span<const SampleRecord> records, RecordFormat format);

std::string export_records(const SampleStore& store, const QueryFilter& filter, RecordFormat format);

// Parses and validates every row; throws ValidationError naming the first bad
// row ("row N", 1-based, data rows only).
std::vector<SampleRecord> parse_records(std::string_view data, RecordFormat format);

// All-or-nothing. Source record ids are kept when, sorted, they are unique and
// above the store's last id; otherwise rows get fresh ids in input order.
std::size_t import_records(SampleStore& store, std::string_view data, RecordFormat format);

}  // namespace homethru::store
