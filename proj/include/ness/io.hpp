#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ness::io {

/// "%.9g" formatting used for reports and data tables.
std::string format_number(double value);

/// Rounds to 9 significant digits so JSON serializers emit at most 9 digits.
/// Shortest-safe round-trip form (17 significant digits).
std::string format_exact(double value);

double round9(double value);

std::optional<double> parse_double(std::string_view cell);

std::vector<std::string> split_csv_line(std::string_view line);
std::vector<std::string> split_lines(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace ness::io
