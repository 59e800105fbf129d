#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evlo {

// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);

std::string_view trim(std::string_view s);

// Splits "key = value"; throws ParseError naming `line_no` when malformed.
std::pair<std::string, std::string> split_key_value(std::string_view line,
                                                    int line_no);

// Strict parsers: the whole token must be consumed. Errors name `line_no`.
double parse_double(std::string_view token, int line_no);
long parse_long(std::string_view token, int line_no);
std::vector<double> parse_doubles(std::string_view text, int line_no);

std::vector<std::string_view> split_whitespace(std::string_view text);
std::vector<std::string_view> split_char(std::string_view text, char sep);

}  // namespace evlo
