/**
 * @file config.hpp
 * @brief Flat key = value run configuration: parsing, validation, defaults,
 *        and round-trippable dumping.
 *
 * Entries are applied in order and later entries win. The selector keys
 * `preset` and `problem` replace the whole experiment-parameter block with
 * the named preset's defaults (or the problem's default preset), so callers
 * put selectors first and overrides after them. Unknown keys are rejected
 * with the offending location.
 */

#pragma once

#include <string>
#include <vector>

#include "anisotikh/bench.hpp"

namespace anisotikh {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::string where;  ///< "line 3 of cfg.txt", "flag --seed", ...
};

struct RunConfig {
  ExperimentPreset preset;
  std::string out_dir = "out";
  bool write_pgm = true;
  bool write_f64 = true;
  int verbosity = 1;
  bool grad_check = false;
};

/// All recognized keys, in canonical dump order.
const std::vector<std::string>& config_keys();

/// Read a config file into entries; "#" starts a comment, blank lines are
/// skipped, each remaining line must be "key = value".
std::vector<ConfigEntry> read_config_file(const std::string& path);

/// Apply entries in order over the default configuration and validate.
RunConfig parse_config_entries(const std::vector<ConfigEntry>& entries);

/// Serialize so that parse(dump(c)) == c for the experiment parameters.
std::string dump_config(const RunConfig& config);

/// Range checks over the assembled configuration; throws ConfigError naming
/// the offending key.
void validate_config(const RunConfig& config);

}  // namespace anisotikh
