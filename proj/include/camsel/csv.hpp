#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace camsel::csv {

/// Unquoted comma-separated rows. Blank lines are skipped; CR before LF is
/// stripped. Fields are trimmed of surrounding spaces.
struct Table {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

double parse_double(std::string_view field, const std::string& where);
std::size_t parse_index(std::string_view field, const std::string& where);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace camsel::csv
