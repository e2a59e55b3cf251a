#include "anisotikh/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>

namespace anisotikh {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const ConfigEntry& entry, const std::string& what) {
  throw ConfigError(entry.key + " (" + entry.where + "): " + what);
}

double parse_double(const ConfigEntry& e) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (end == e.value.c_str() || *end != '\0' || errno == ERANGE)
    bad(e, "malformed number '" + e.value + "'");
  if (!std::isfinite(v)) bad(e, "value must be finite");
  return v;
}

long long parse_int(const ConfigEntry& e) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0' || errno == ERANGE)
    bad(e, "malformed integer '" + e.value + "'");
  return v;
}

std::uint64_t parse_uint64(const ConfigEntry& e) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0' || errno == ERANGE ||
      e.value.find('-') != std::string::npos)
    bad(e, "malformed unsigned integer '" + e.value + "'");
  return v;
}

bool parse_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  bad(e, "malformed boolean '" + e.value + "' (use true/false)");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RawWeights {
  double sigma_x = 1.0;
  double sigma_z = 1e-3;
};

void apply_entry(RunConfig& cfg, RawWeights& raw, const ConfigEntry& e) {
  ExperimentPreset& p = cfg.preset;
  const std::string& k = e.key;
  try {
    if (k == "preset") {
      p = preset_by_name(e.value);
      raw = {p.weights.sigma_x, p.weights.sigma_z};
    } else if (k == "problem") {
      p = default_preset(problem_kind_from_string(e.value));
      raw = {p.weights.sigma_x, p.weights.sigma_z};
    } else if (k == "n_x") {
      const long long v = parse_int(e);
      if (v < 1) bad(e, "must be >= 1");
      p.grid = Grid(static_cast<Index>(v), p.grid.n_z);
    } else if (k == "n_z") {
      const long long v = parse_int(e);
      if (v < 1) bad(e, "must be >= 1");
      p.grid = Grid(p.grid.n_x, static_cast<Index>(v));
    } else if (k == "phantom") {
      p.phantom.kind = phantom_kind_from_string(e.value);
    } else if (k == "phantom_angle") {
      p.phantom.angle = parse_double(e);
    } else if (k == "phantom_period") {
      const double v = parse_double(e);
      if (!(v > 0.0)) bad(e, "must be > 0");
      p.phantom.period = v;
    } else if (k == "noise_level") {
      const double v = parse_double(e);
      if (v < 0.0) bad(e, "must be >= 0");
      p.noise_level = v;
    } else if (k == "model_scale") {
      const double v = parse_double(e);
      if (!(v > 0.0)) bad(e, "must be > 0");
      p.model_scale = v;
    } else if (k == "sigma_x") {
      const double v = parse_double(e);
      if (!(v > 0.0)) bad(e, "must be > 0");
      raw.sigma_x = v;
    } else if (k == "sigma_z") {
      const double v = parse_double(e);
      if (v < 0.0) bad(e, "must be >= 0");
      raw.sigma_z = v;
    } else if (k == "alpha") {
      const double v = parse_double(e);
      if (v < 0.0) bad(e, "must be >= 0");
      p.alpha = v;
    } else if (k == "beta") {
      const double v = parse_double(e);
      if (v < 0.0) bad(e, "must be >= 0");
      p.beta = v;
    } else if (k == "delta") {
      const double v = parse_double(e);
      if (!(v > 0.0)) bad(e, "must be > 0");
      p.delta = v;
    } else if (k == "seed") {
      p.seed = parse_uint64(e);
    } else if (k == "blur_sigma") {
      const double v = parse_double(e);
      if (!(v > 0.0)) bad(e, "must be > 0");
      p.blur_sigma = v;
    } else if (k == "tomo_sources") {
      const long long v = parse_int(e);
      if (v < 1) bad(e, "must be >= 1");
      p.tomo_sources = static_cast<Index>(v);
    } else if (k == "tomo_receivers") {
      const long long v = parse_int(e);
      if (v < 1) bad(e, "must be >= 1");
      p.tomo_receivers = static_cast<Index>(v);
    } else if (k == "dix_keep_fraction") {
      const double v = parse_double(e);
      if (!(v > 0.0) || v > 1.0) bad(e, "must be in (0, 1]");
      p.dix_keep_fraction = v;
    } else if (k == "cg_tolerance") {
      const double v = parse_double(e);
      if (!(v > 0.0) || v >= 1.0) bad(e, "must be in (0, 1)");
      p.lower_opts.rel_tolerance = v;
    } else if (k == "cg_max_iterations") {
      const long long v = parse_int(e);
      if (v < 0) bad(e, "must be >= 0 (0 selects the default cap)");
      p.lower_opts.max_iterations = static_cast<Index>(v);
    } else if (k == "memory") {
      const long long v = parse_int(e);
      if (v < 1) bad(e, "must be >= 1");
      p.outer_opts.memory = static_cast<int>(v);
    } else if (k == "max_outer_iterations") {
      const long long v = parse_int(e);
      if (v < 1) bad(e, "must be >= 1");
      p.outer_opts.max_outer_iterations = static_cast<int>(v);
    } else if (k == "pg_tolerance") {
      const double v = parse_double(e);
      if (!(v > 0.0)) bad(e, "must be > 0");
      p.outer_opts.pg_tolerance = v;
    } else if (k == "f_rel_tolerance") {
      const double v = parse_double(e);
      if (!(v > 0.0)) bad(e, "must be > 0");
      p.outer_opts.f_rel_tolerance = v;
    } else if (k == "sufficient_decrease") {
      const double v = parse_double(e);
      if (!(v > 0.0) || v >= 1.0) bad(e, "must be in (0, 1)");
      p.outer_opts.sufficient_decrease = v;
    } else if (k == "curvature") {
      const double v = parse_double(e);
      if (!(v > 0.0) || v >= 1.0) bad(e, "must be in (0, 1)");
      p.outer_opts.curvature = v;
    } else if (k == "max_line_search_trials") {
      const long long v = parse_int(e);
      if (v < 1) bad(e, "must be >= 1");
      p.outer_opts.max_line_search_trials = static_cast<int>(v);
    } else if (k == "mu0") {
      const double v = parse_double(e);
      if (v < 0.0) bad(e, "must be >= 0");
      p.mu0_fallback = v;
    } else if (k == "out_dir") {
      if (e.value.empty()) bad(e, "must not be empty");
      cfg.out_dir = e.value;
    } else if (k == "write_pgm") {
      cfg.write_pgm = parse_bool(e);
    } else if (k == "write_f64") {
      cfg.write_f64 = parse_bool(e);
    } else if (k == "verbosity") {
      const long long v = parse_int(e);
      if (v < 0 || v > 3) bad(e, "must be in 0..3");
      cfg.verbosity = static_cast<int>(v);
    } else if (k == "grad_check") {
      cfg.grad_check = parse_bool(e);
    } else {
      throw ConfigError("unknown key '" + k + "' (" + e.where + ")");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& err) {
    bad(e, err.what());
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "preset",          "problem",
      "n_x",             "n_z",
      "phantom",         "phantom_angle",
      "phantom_period",  "noise_level",
      "model_scale",     "sigma_x",
      "sigma_z",
      "alpha",           "beta",
      "delta",           "seed",
      "blur_sigma",      "tomo_sources",
      "tomo_receivers",  "dix_keep_fraction",
      "cg_tolerance",    "cg_max_iterations",
      "memory",          "max_outer_iterations",
      "pg_tolerance",    "f_rel_tolerance",
      "sufficient_decrease", "curvature",
      "max_line_search_trials", "mu0",
      "out_dir",         "write_pgm",
      "write_f64",       "verbosity",
      "grad_check"};
  return keys;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::vector<ConfigEntry> entries;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno) + " of " + path;
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where};
    if (e.key.empty()) throw ConfigError(where + ": empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

RunConfig parse_config_entries(const std::vector<ConfigEntry>& entries) {
  RunConfig cfg;
  cfg.preset = default_preset(ProblemKind::denoise);
  RawWeights raw{cfg.preset.weights.sigma_x, cfg.preset.weights.sigma_z};
  for (const ConfigEntry& e : entries) apply_entry(cfg, raw, e);
  try {
    cfg.preset.weights = AnisoWeights(raw.sigma_x, raw.sigma_z);
  } catch (const Error& err) {
    throw ConfigError(std::string("sigma_x/sigma_z: ") + err.what());
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  const ExperimentPreset& p = cfg.preset;
  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
  };
  if (p.grid.n_x < 1 || p.grid.n_z < 1) fail("n_x/n_z", "must be >= 1");
  if (!std::isfinite(p.phantom.angle)) fail("phantom_angle", "must be finite");
  if (!(p.phantom.period > 0.0)) fail("phantom_period", "must be > 0");
  if (p.noise_level < 0.0) fail("noise_level", "must be >= 0");
  if (!(p.model_scale > 0.0)) fail("model_scale", "must be > 0");
  if (p.alpha < 0.0) fail("alpha", "must be >= 0");
  if (p.beta < 0.0) fail("beta", "must be >= 0");
  if (!(p.delta > 0.0)) fail("delta", "must be > 0");
  if (!(p.blur_sigma > 0.0)) fail("blur_sigma", "must be > 0");
  if (p.tomo_sources < 1) fail("tomo_sources", "must be >= 1");
  if (p.tomo_receivers < 1) fail("tomo_receivers", "must be >= 1");
  if (!(p.dix_keep_fraction > 0.0) || p.dix_keep_fraction > 1.0)
    fail("dix_keep_fraction", "must be in (0, 1]");
  if (!(p.lower_opts.rel_tolerance > 0.0) || p.lower_opts.rel_tolerance >= 1.0)
    fail("cg_tolerance", "must be in (0, 1)");
  if (p.lower_opts.max_iterations < 0) fail("cg_max_iterations", "must be >= 0");
  if (p.outer_opts.memory < 1) fail("memory", "must be >= 1");
  if (p.outer_opts.max_outer_iterations < 1)
    fail("max_outer_iterations", "must be >= 1");
  if (!(p.outer_opts.pg_tolerance > 0.0)) fail("pg_tolerance", "must be > 0");
  if (!(p.outer_opts.f_rel_tolerance > 0.0))
    fail("f_rel_tolerance", "must be > 0");
  if (!(p.outer_opts.sufficient_decrease > 0.0) ||
      p.outer_opts.sufficient_decrease >= 1.0)
    fail("sufficient_decrease", "must be in (0, 1)");
  if (!(p.outer_opts.curvature > p.outer_opts.sufficient_decrease) ||
      p.outer_opts.curvature >= 1.0)
    fail("curvature", "must be in (sufficient_decrease, 1)");
  if (p.outer_opts.max_line_search_trials < 1)
    fail("max_line_search_trials", "must be >= 1");
  if (p.mu0_fallback < 0.0) fail("mu0", "must be >= 0");
  if (cfg.out_dir.empty()) fail("out_dir", "must not be empty");
  if (cfg.verbosity < 0 || cfg.verbosity > 3) fail("verbosity", "must be in 0..3");
}

std::string dump_config(const RunConfig& cfg) {
  const ExperimentPreset& p = cfg.preset;
  std::string s;
  auto put = [&s](const std::string& key, const std::string& value) {
    s += key + " = " + value + "\n";
  };
  put("problem", to_string(p.problem));
  put("n_x", std::to_string(p.grid.n_x));
  put("n_z", std::to_string(p.grid.n_z));
  put("phantom", to_string(p.phantom.kind));
  put("phantom_angle", fmt(p.phantom.angle));
  put("phantom_period", fmt(p.phantom.period));
  put("noise_level", fmt(p.noise_level));
  put("model_scale", fmt(p.model_scale));
  put("sigma_x", fmt(p.weights.sigma_x));
  put("sigma_z", fmt(p.weights.sigma_z));
  put("alpha", fmt(p.alpha));
  put("beta", fmt(p.beta));
  put("delta", fmt(p.delta));
  put("seed", std::to_string(p.seed));
  put("blur_sigma", fmt(p.blur_sigma));
  put("tomo_sources", std::to_string(p.tomo_sources));
  put("tomo_receivers", std::to_string(p.tomo_receivers));
  put("dix_keep_fraction", fmt(p.dix_keep_fraction));
  put("cg_tolerance", fmt(p.lower_opts.rel_tolerance));
  put("cg_max_iterations", std::to_string(p.lower_opts.max_iterations));
  put("memory", std::to_string(p.outer_opts.memory));
  put("max_outer_iterations", std::to_string(p.outer_opts.max_outer_iterations));
  put("pg_tolerance", fmt(p.outer_opts.pg_tolerance));
  put("f_rel_tolerance", fmt(p.outer_opts.f_rel_tolerance));
  put("sufficient_decrease", fmt(p.outer_opts.sufficient_decrease));
  put("curvature", fmt(p.outer_opts.curvature));
  put("max_line_search_trials",
      std::to_string(p.outer_opts.max_line_search_trials));
  put("mu0", fmt(p.mu0_fallback));
  put("out_dir", cfg.out_dir);
  put("write_pgm", cfg.write_pgm ? "true" : "false");
  put("write_f64", cfg.write_f64 ? "true" : "false");
  put("verbosity", std::to_string(cfg.verbosity));
  put("grad_check", cfg.grad_check ? "true" : "false");
  return s;
}

}  // namespace anisotikh
