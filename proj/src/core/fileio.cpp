#include "homethru/fileio.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru {

namespace fs = std::filesystem;

namespace {

std::string unique_suffix() {
    static thread_local std::mt19937_64 rng(std::random_device{}());
    return fmt::format("{}-{:016x}", ::getpid(), rng());
}

void write_and_sync(const fs::path& path, std::string_view content) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw StorageError(fmt::format("cannot create {}: {}", path.string(), std::strerror(errno)));
    std::size_t written = 0;
    while (written < content.size()) {
        const auto n = ::write(fd, content.data() + written, content.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int error = errno;
            ::close(fd);
            throw StorageError(fmt::format("cannot write {}: {}", path.string(), std::strerror(error)));
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        const int error = errno;
        ::close(fd);
        throw StorageError(fmt::format("cannot sync {}: {}", path.string(), std::strerror(error)));
    }
    ::close(fd);
}

fs::path parent_or_current(const fs::path& path) {
    return path.has_parent_path() ? path.parent_path() : fs::path(".");
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError(fmt::format("cannot read {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    const auto temp = parent_or_current(path) / fmt::format(".{}.tmp-{}", path.filename().string(), unique_suffix());
    try {
        write_and_sync(temp, content);
        fs::rename(temp, path);
    } catch (const fs::filesystem_error& e) {
        std::error_code ignored;
        fs::remove(temp, ignored);
        throw StorageError(fmt::format("cannot write {}: {}", path.string(), e.code().message()));
    } catch (...) {
        std::error_code ignored;
        fs::remove(temp, ignored);
        throw;
    }
}

void write_files_atomic(const fs::path& directory, const std::vector<std::pair<std::string, std::string>>& files) {
    const fs::path target = directory.has_filename() ? directory : directory.parent_path();
    const auto staging =
        parent_or_current(target) / fmt::format(".{}.staging-{}", target.filename().string(), unique_suffix());
    const auto cleanup = [&] {
        std::error_code ignored;
        fs::remove_all(staging, ignored);
    };
    try {
        std::error_code ec;
        if (fs::exists(target, ec) && !fs::is_directory(target, ec))
            throw StorageError(fmt::format("{} exists and is not a directory", target.string()));
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        fs::create_directory(staging);
        for (const auto& [name, content] : files) write_and_sync(staging / name, content);

        if (!fs::exists(target)) {
            fs::rename(staging, target);
            return;
        }
        for (const auto& [name, content] : files) fs::rename(staging / name, target / name);
        cleanup();
    } catch (const fs::filesystem_error& e) {
        cleanup();
        throw StorageError(fmt::format("cannot write into {}: {}", target.string(), e.code().message()));
    } catch (...) {
        cleanup();
        throw;
    }
}

}  // namespace homethru
