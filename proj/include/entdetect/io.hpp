#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace entdetect::io {

/// 17 significant digits, locale independent. Round-trips every double.
std::string format_double(double x);
/// Shortest representation that round-trips.
std::string format_short(double x);
/// Whole-string parse; throws FormatError.
double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
/// Writes to `path.tmp` and renames over `path`. Creates parent directories.
void write_file_atomic(const std::string& path, std::string_view content);

/// FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace entdetect::io
