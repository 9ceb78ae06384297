#include "homethru/store/sample_store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>

#include "homethru/errors.hpp"
#include "homethru/log.hpp"

namespace homethru::store {

void validate(const QueryFilter& filter) {
    if (filter.from_utc && filter.to_utc && *filter.from_utc >= *filter.to_utc)
        throw InvalidArgument("query range is empty: 'from' must precede 'to'");
}

bool matches(const QueryFilter& filter, const ThroughputSample& sample) {
    if (filter.household_id && sample.household_id != *filter.household_id) return false;
    if (filter.path && sample.path != *filter.path) return false;
    if (filter.from_utc && sample.timestamp_utc < *filter.from_utc) return false;
    if (filter.to_utc && sample.timestamp_utc >= *filter.to_utc) return false;
    return true;
}

nlohmann::ordered_json to_json(const SampleRecord& record) {
    nlohmann::ordered_json j;
    j["record_id"] = record.record_id;
    const auto fields = homethru::to_json(record.sample);
    for (const auto& [key, value] : fields.items()) j[key] = value;
    j["schema_version"] = record.schema_version;
    return j;
}

SampleRecord record_from_json(const nlohmann::json& object) {
    SampleRecord record;
    record.sample = sample_from_json(object);
    if (const auto id = object.find("record_id"); id != object.end()) {
        if (!id->is_number_unsigned() || id->get<std::uint64_t>() == 0)
            throw ValidationError("record_id must be a positive integer");
        record.record_id = id->get<std::uint64_t>();
    }
    if (const auto version = object.find("schema_version"); version != object.end()) {
        if (!version->is_number_integer()) throw ValidationError("schema_version must be an integer");
        record.schema_version = version->get<int>();
    }
    if (record.schema_version < 1 || record.schema_version > kSchemaVersion)
        throw ValidationError(fmt::format("unsupported schema_version {}", record.schema_version));
    validate(record.sample);
    return record;
}

SampleStore::SampleStore(std::filesystem::path log_path) : path_(std::move(log_path)) {
    if (path_.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path_.parent_path(), ec);
    }
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw StorageError(fmt::format("cannot open sample log {}: {}", path_.string(), std::strerror(errno)));
    try {
        load();
    } catch (...) {
        ::close(fd_);
        throw;
    }
}

SampleStore::~SampleStore() {
    if (fd_ >= 0) ::close(fd_);
}

void SampleStore::load() {
    std::ifstream in(path_, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    // Only the final line can be torn: every append ends with its newline.
    std::size_t complete = content.rfind('\n');
    complete = complete == std::string::npos ? 0 : complete + 1;
    if (complete < content.size()) {
        recovered_bytes_ = content.size() - complete;
        if (::ftruncate(fd_, static_cast<off_t>(complete)) != 0 || ::fdatasync(fd_) != 0)
            throw StorageError(fmt::format("cannot truncate torn record in {}: {}", path_.string(), std::strerror(errno)));
        logger().warn("event=store_recovered path={} dropped_bytes={}", path_.string(), recovered_bytes_);
    }
    file_size_ = complete;

    std::size_t line_number = 0;
    std::size_t begin = 0;
    while (begin < complete) {
        const auto end = content.find('\n', begin);
        ++line_number;
        const std::string_view line(content.data() + begin, end - begin);
        begin = end + 1;
        if (line.empty()) continue;

        const auto doc = nlohmann::json::parse(line, nullptr, false);
        SampleRecord record;
        try {
            if (doc.is_discarded()) throw ValidationError("not valid JSON");
            record = record_from_json(doc);
        } catch (const Error& e) {
            throw StorageError(fmt::format("corrupt record at {}:{}: {}", path_.string(), line_number, e.what()));
        }
        if (record.record_id == 0 || (!records_.empty() && record.record_id <= records_.back().record_id))
            throw StorageError(fmt::format("record ids out of order at {}:{}", path_.string(), line_number));
        records_.push_back(std::move(record));
    }
    ::lseek(fd_, 0, SEEK_END);
}

void SampleStore::write_all(const std::string& text) {
    const auto rollback = [&](int error) {
        if (::ftruncate(fd_, static_cast<off_t>(file_size_)) == 0) ::lseek(fd_, 0, SEEK_END);
        throw StorageError(fmt::format("write to {} failed: {}", path_.string(), std::strerror(error)));
    };

    std::size_t written = 0;
    while (written < text.size()) {
        const auto n = ::write(fd_, text.data() + written, text.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            rollback(errno);
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd_) != 0) rollback(errno);
    file_size_ += text.size();
}

std::uint64_t SampleStore::append_sample(const ThroughputSample& sample) {
    SampleRecord record;
    record.sample = sample;
    return append_batch(std::span(&record, 1)).front();
}

std::vector<std::uint64_t> SampleStore::append_batch(std::span<const SampleRecord> records) {
    std::lock_guard write_lock(write_mutex_);

    std::vector<SampleRecord> staged(records.begin(), records.end());
    std::uint64_t next_id = last_record_id() + 1;
    std::string text;
    for (std::size_t i = 0; i < staged.size(); ++i) {
        auto& record = staged[i];
        try {
            validate(record.sample);
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("record {}: {}", i + 1, e.what()));
        }
        if (record.record_id == 0) record.record_id = next_id;
        if (record.record_id < next_id)
            throw ValidationError(fmt::format("record {}: record_id {} is not above {}", i + 1, record.record_id,
                                              next_id - 1));
        next_id = record.record_id + 1;
        text += to_json(record).dump();
        text += '\n';
    }
    if (staged.empty()) return {};

    write_all(text);

    std::vector<std::uint64_t> ids;
    ids.reserve(staged.size());
    std::unique_lock lock(records_mutex_);
    for (auto& record : staged) {
        ids.push_back(record.record_id);
        records_.push_back(std::move(record));
    }
    return ids;
}

std::vector<SampleRecord> SampleStore::query_samples(const QueryFilter& filter) const {
    validate(filter);
    std::vector<SampleRecord> out;
    {
        std::shared_lock lock(records_mutex_);
        for (const auto& record : records_)
            if (matches(filter, record.sample)) out.push_back(record);
    }
    // Records are held in id order, so a stable sort on time keeps ties by id.
    std::stable_sort(out.begin(), out.end(), [](const SampleRecord& a, const SampleRecord& b) {
        return a.sample.timestamp_utc < b.sample.timestamp_utc;
    });
    return out;
}

std::vector<ThroughputSample> SampleStore::all_samples() const {
    std::shared_lock lock(records_mutex_);
    std::vector<ThroughputSample> out;
    out.reserve(records_.size());
    for (const auto& record : records_) out.push_back(record.sample);
    return out;
}

std::size_t SampleStore::size() const {
    std::shared_lock lock(records_mutex_);
    return records_.size();
}

std::uint64_t SampleStore::last_record_id() const {
    std::shared_lock lock(records_mutex_);
    return records_.empty() ? 0 : records_.back().record_id;
}

}  // namespace homethru::store
