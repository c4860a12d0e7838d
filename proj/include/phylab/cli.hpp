// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "phylab/experiments.hpp"

namespace phylab::cli {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// One config entry; sections group keys per module. Later entries for the
/// same (section, key) shadow earlier ones, matching apply order.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
};
using SectionedConfig = std::vector<ConfigEntry>;

/// Parses the sectioned key-value format (docs/config_schema.md). Grammar
/// errors throw experiments::ConfigError with key path "config.format".
SectionedConfig parse_config_text(const std::string& text);

/// parse_config_text on a file's bytes; IO failures throw std::runtime_error.
SectionedConfig load_config_file(const std::string& path);

/// Applies one "key=value" or "section.key=value" override. Bare keys land
/// in default_section. Overwrites the last matching entry or appends.
void apply_override(SectionedConfig& config, const std::string& assignment,
                    const std::string& default_section);

/// Entries of one section as (key, value) pairs, in order.
experiments::KeyValueList section_settings(const SectionedConfig& config,
                                           const std::string& section);

/// Last value of section.key, or fallback when absent.
std::string lookup(const SectionedConfig& config, const std::string& section,
                   const std::string& key, const std::string& fallback);

/// FNV-1a 64 over the normalized config: last-wins deduplication, lines
/// "section.key=value" sorted and '\n'-joined. Returns 16 lowercase hex
/// digits; insensitive to entry order, sensitive to every effective value.
std::string config_hash(const SectionedConfig& config);

/// results.csv bytes. Fixed header and column order (experiment, method,
/// snr_db, metric, value, stderr, trials, seed, config_hash); floats with 9
/// significant digits, '.' decimal separator, '\n' line endings.
std::string format_results_csv(const experiments::SweepResult& result,
                               std::uint64_t master_seed, const std::string& hash);

struct GradCheckCase {
  std::string name;
  std::vector<double> per_layer_max;  // max relative error per weight layer
  double max_rel_error = 0.0;
};

/// Analytic-vs-central-difference gradient comparison over every activation
/// and loss pairing (output and hidden placements, noise layer included).
std::vector<GradCheckCase> gradcheck_suite();

/// Command dispatcher; args excludes the program name. Returns the process
/// exit code: 0 success, 1 usage/io/other failure, 2 config schema
/// violation, 3 training divergence.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phylab::cli
