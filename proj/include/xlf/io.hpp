#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace xlf::io {

/// Reads a whole file. Throws ValidationError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// UTC timestamp, ISO 8601 with seconds precision.
std::string utc_timestamp();

}  // namespace xlf::io
