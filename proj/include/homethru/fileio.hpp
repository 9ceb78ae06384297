#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace homethru {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, syncs it, then renames it over `path`.
// On failure the target is untouched and no temporary remains. Throws StorageError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Publishes several files into `directory` together. All files are first
// written into a staging directory next to it; nothing appears in
// `directory` unless every write succeeded. A missing `directory` is created
// by renaming the staging directory into place.
void write_files_atomic(const std::filesystem::path& directory,
                        const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace homethru
