#include "homethru/store/record_io.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru::store {

namespace {

constexpr std::size_t kCsvColumns = 10;

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
    std::string quoted = "\"";
    for (const char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

// RFC 4180 records: quoted fields may hold commas, doubled quotes, newlines.
std::vector<std::vector<std::string>> split_csv(std::string_view data) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty())
                    throw ValidationError(fmt::format("row {}: stray quote", rows.size()));
                quoted = true;
                field_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = false;
                break;
            case '\r':
                break;
            case '\n':
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
                row.clear();
                field.clear();
                field_started = false;
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (quoted) throw ValidationError(fmt::format("row {}: unterminated quoted field", rows.size()));
    if (field_started || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
T parse_number(const std::string& text, const char* column) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty())
        throw ValidationError(fmt::format("column {} is not a valid number: '{}'", column, text));
    return value;
}

SampleRecord record_from_csv(const std::vector<std::string>& fields) {
    if (fields.size() != kCsvColumns)
        throw ValidationError(fmt::format("expected {} columns, found {}", kCsvColumns, fields.size()));
    SampleRecord record;
    if (!fields[0].empty()) {
        record.record_id = parse_number<std::uint64_t>(fields[0], "record_id");
        if (record.record_id == 0) throw ValidationError("record_id must be positive");
    }
    auto& s = record.sample;
    try {
        s.timestamp_utc = parse_rfc3339(fields[1]);
        s.path = parse_measurement_path(fields[4]);
    } catch (const InvalidArgument& e) {
        throw ValidationError(e.what());
    }
    s.household_id = fields[2];
    s.device_id = fields[3];
    s.throughput_mbps = parse_number<double>(fields[5], "throughput_mbps");
    s.duration_seconds = parse_number<double>(fields[6], "duration_seconds");
    if (fields[7].starts_with('-')) throw ValidationError("bytes_transferred must be nonnegative");
    s.bytes_transferred = parse_number<std::uint64_t>(fields[7], "bytes_transferred");
    s.tool = fields[8];
    record.schema_version = fields[9].empty() ? kSchemaVersion : parse_number<int>(fields[9], "schema_version");
    if (record.schema_version < 1 || record.schema_version > kSchemaVersion)
        throw ValidationError(fmt::format("unsupported schema_version {}", record.schema_version));
    validate(record.sample);
    return record;
}

}  // namespace

RecordFormat parse_record_format(std::string_view text) {
    if (text == "jsonl") return RecordFormat::jsonl;
    if (text == "csv") return RecordFormat::csv;
    throw InvalidArgument(fmt::format("unknown record format '{}' (expected jsonl or csv)", text));
}

std::string format_records(std::span<const SampleRecord> records, RecordFormat format) {
    std::string out;
    if (format == RecordFormat::jsonl) {
        for (const auto& record : records) {
            out += to_json(record).dump();
            out += '\n';
        }
        return out;
    }
    out += kCsvHeader;
    out += '\n';
    for (const auto& record : records) {
        const auto& s = record.sample;
        // {} formats doubles as the shortest round-trip representation.
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", record.record_id, format_rfc3339(s.timestamp_utc),
                           csv_field(s.household_id), csv_field(s.device_id), to_string(s.path), s.throughput_mbps,
                           s.duration_seconds, s.bytes_transferred, csv_field(s.tool), record.schema_version);
    }
    return out;
}

std::string export_records(const SampleStore& store, const QueryFilter& filter, RecordFormat format) {
    return format_records(store.query_samples(filter), format);
}

std::vector<SampleRecord> parse_records(std::string_view data, RecordFormat format) {
    std::vector<SampleRecord> records;
    if (format == RecordFormat::jsonl) {
        std::size_t row = 0;
        std::size_t begin = 0;
        while (begin < data.size()) {
            auto end = data.find('\n', begin);
            if (end == std::string_view::npos) end = data.size();
            auto line = data.substr(begin, end - begin);
            begin = end + 1;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.empty()) continue;
            ++row;
            try {
                const auto doc = nlohmann::json::parse(line, nullptr, false);
                if (doc.is_discarded()) throw ValidationError("not valid JSON");
                records.push_back(record_from_json(doc));
            } catch (const Error& e) {
                throw ValidationError(fmt::format("row {}: {}", row, e.what()));
            }
        }
        return records;
    }

    const auto rows = split_csv(data);
    if (rows.empty()) throw ValidationError("CSV input has no header");
    std::string header;
    for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
    if (header != kCsvHeader) throw ValidationError(fmt::format("unexpected CSV header '{}'", header));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == 1 && rows[i][0].empty()) continue;
        try {
            records.push_back(record_from_csv(rows[i]));
        } catch (const Error& e) {
            throw ValidationError(fmt::format("row {}: {}", i, e.what()));
        }
    }
    return records;
}

std::size_t import_records(SampleStore& store, std::string_view data, RecordFormat format) {
    auto records = parse_records(data, format);
    if (records.empty()) return 0;

    const bool all_have_ids =
        std::all_of(records.begin(), records.end(), [](const SampleRecord& r) { return r.record_id != 0; });
    bool keep_ids = false;
    if (all_have_ids) {
        std::vector<std::uint64_t> ids;
        ids.reserve(records.size());
        for (const auto& record : records) ids.push_back(record.record_id);
        std::sort(ids.begin(), ids.end());
        keep_ids = std::adjacent_find(ids.begin(), ids.end()) == ids.end() && ids.front() > store.last_record_id();
        if (keep_ids)
            std::sort(records.begin(), records.end(),
                      [](const SampleRecord& a, const SampleRecord& b) { return a.record_id < b.record_id; });
    }
    if (!keep_ids)
        for (auto& record : records) record.record_id = 0;
    return store.append_batch(records).size();
}

}  // namespace homethru::store
