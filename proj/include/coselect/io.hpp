#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace coselect::io {

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Fixed 12-significant-digit rendering used by every report CSV.
std::string format_number(double x);

/// Ordered key = value pairs. Blank lines and '#' comments are skipped;
/// repeated keys keep every value in order.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::string_view text, const std::string& source_name);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

} // namespace coselect::io
