#include "evlo/text_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "evlo/error.hpp"

namespace evlo {

namespace {

[[noreturn]] void bad_token(std::string_view token, int line_no,
                            const char* what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) +
                                          ": cannot parse '" +
                                          std::string(token) + "' as " + what);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::pair<std::string, std::string> split_key_value(std::string_view line,
                                                    int line_no) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) + ": expected key = value");
  }
  const std::string_view key = trim(line.substr(0, eq));
  if (key.empty()) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) + ": empty key");
  }
  return {std::string(key), std::string(trim(line.substr(eq + 1)))};
}

double parse_double(std::string_view token, int line_no) {
  token = trim(token);
  double v = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    bad_token(token, line_no, "a finite number");
  }
  return v;
}

long parse_long(std::string_view token, int line_no) {
  token = trim(token);
  long v = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (token.empty() || ec != std::errc() || ptr != end) {
    bad_token(token, line_no, "an integer");
  }
  return v;
}

std::vector<double> parse_doubles(std::string_view text, int line_no) {
  std::vector<double> out;
  for (const auto tok : split_whitespace(text)) {
    out.push_back(parse_double(tok, line_no));
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_char(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace evlo
