#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graylearn {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Fixed-precision text, for human-facing summary columns.
std::string format_fixed(double value, int digits);

std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

/// Split one CSV record on commas. Double-quoted fields may contain commas.
std::vector<std::string> split_csv_line(std::string_view line);

/// Write to `<path>.tmp` and rename over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace graylearn
