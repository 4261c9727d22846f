#pragma once

#include <filesystem>
#include <string>

namespace scenefuse::detail {

/// Whole file as bytes; IoError on open/read failure.
std::string read_file_bytes(const std::filesystem::path& path);

/// Unique sibling path used by the atomic writers.
std::filesystem::path temp_sibling(const std::filesystem::path& path);

}  // namespace scenefuse::detail
