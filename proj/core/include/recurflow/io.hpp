#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace recurflow::io {

/// 17 significant digits, enough to round-trip any double.
std::string fmt17(double value);

void write_text(const std::filesystem::path& path, std::string_view contents);
std::string read_text(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace recurflow::io
