#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace atgen::text {

std::string_view trim(std::string_view s);

// Trim and collapse internal whitespace runs to a single space.
std::string normalize_space(std::string_view s);

// normalize_space + ASCII lower-casing, used for title comparison.
std::string normalize_title(std::string_view s);

std::string to_lower(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

// Splits on '\n' and drops a trailing '\r' from each line. A trailing newline
// does not produce an empty final line.
std::vector<std::string> split_lines(std::string_view s);

std::string normalize_newlines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Lower-case hex SHA-256 of the input.
std::string sha256_hex(std::string_view data);

}  // namespace atgen::text
