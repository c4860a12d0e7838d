// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace phylab::textcfg {

/// Strips ASCII whitespace from both ends.
std::string trim(const std::string& text);

// Scalar parsers for config values. All are strict: the whole (trimmed)
// string must be consumed, and malformed text raises std::invalid_argument
// naming the expected type.
std::int64_t parse_int(const std::string& text);
std::uint64_t parse_uint(const std::string& text);
double parse_real(const std::string& text);
bool parse_flag(const std::string& text);  // true/false

/// Bracketed comma-separated reals: "[0, 5, 10]". An empty list "[]" is
/// allowed; validation of emptiness is the caller's business.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace phylab::textcfg
