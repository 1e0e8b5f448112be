#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fsuc::csv {

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Strict double parse; throws ParseError with `where` context.
double parse_double(std::string_view text, const std::string& where);
long long parse_int(std::string_view text, const std::string& where);

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

// Reads all lines, stripping a trailing '\r'. Throws Error if unreadable.
std::vector<std::string> read_lines(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace fsuc::csv
