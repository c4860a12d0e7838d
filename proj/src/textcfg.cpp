// SPDX-License-Identifier: Apache-2.0
#include "phylab/textcfg.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <stdexcept>

namespace phylab::textcfg {

std::string trim(const std::string& text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return text.substr(b, e - b);
}

namespace {

[[noreturn]] void bad(const std::string& what, const std::string& text) {
  throw std::invalid_argument("expected " + what + ", got '" + text + "'");
}

template <typename T>
T parse_with_from_chars(const std::string& text, const char* what) {
  const std::string t = trim(text);
  T value{};
  const char* begin = t.data();
  const char* end = begin + t.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) bad(what, text);
  return value;
}

}  // namespace

std::int64_t parse_int(const std::string& text) {
  return parse_with_from_chars<std::int64_t>(text, "integer");
}

std::uint64_t parse_uint(const std::string& text) {
  const std::string t = trim(text);
  if (!t.empty() && t[0] == '-') bad("nonnegative integer", text);
  return parse_with_from_chars<std::uint64_t>(text, "nonnegative integer");
}

double parse_real(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) bad("real number", text);
  const char* begin = t.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end != begin + t.size()) bad("real number", text);
  return value;
}

bool parse_flag(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  bad("true or false", text);
}

std::vector<double> parse_real_list(const std::string& text) {
  const std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    bad("bracketed list like [0, 5, 10]", text);
  const std::string body = trim(t.substr(1, t.size() - 2));
  std::vector<double> values;
  if (body.empty()) return values;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = body.find(',', start);
    const std::string item = body.substr(start, comma == std::string::npos ? comma : comma - start);
    values.push_back(parse_real(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

}  // namespace phylab::textcfg
