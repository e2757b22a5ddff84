#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfr/evaluate.hpp"
#include "sfr/linearity.hpp"
#include "sfr/ratings.hpp"
#include "sfr/recovery.hpp"

namespace sfr {

/// Everything an experiment run needs; serialises to a flat `key = value` file.
struct ExperimentConfig {
  std::string dataset;
  RatingFormat format = RatingFormat::movielens_dat;
  RatingBounds bounds{1.0, 5.0};
  double threshold = 0.5;
  std::size_t min_support = 3;
  double split_fraction = 0.8;
  std::uint64_t split_seed = 42;
  SolverConfig solver;
  std::vector<Method> methods{Method::knn, Method::hcp, Method::sfr};
  std::string output_dir = "out";
  unsigned jobs = 1;
  LinearityOptions linearity;

  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct ConfigKey {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// shortest text that reads back to the same double
inline std::string real_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double config_real(const std::string& key, const std::string& v) {
  try {
    return parse_real(v, 0, "number");
  } catch (const ParseError&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

inline std::uint64_t config_uint(const std::string& key, const std::string& v) {
  std::int64_t r = -1;
  try {
    r = parse_integer(v, 0, "integer");
  } catch (const ParseError&) {
  }
  if (r < 0) throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  return static_cast<std::uint64_t>(r);
}

inline std::string methods_text(const std::vector<Method>& ms) {
  std::string s;
  for (const auto m : ms) {
    if (!s.empty()) s += ',';
    s += method_name(m);
  }
  return s;
}

inline std::vector<Method> parse_methods(const std::string& v) {
  std::vector<Method> out;
  for (const auto& part : split_on(v, ",")) {
    const auto name = trim(part);
    const auto m = parse_method(name);
    if (!m) throw ConfigError("config: unknown method '" + std::string(name) + "'");
    for (const auto seen : out)
      if (seen == *m) throw ConfigError("config: method '" + std::string(name) + "' listed twice");
    out.push_back(*m);
  }
  if (out.empty()) throw ConfigError("config: methods must not be empty");
  return out;
}

inline const std::vector<ConfigKey>& config_keys() {
  using C = ExperimentConfig;
  using S = const std::string&;
#define SFR_REAL(key, field) \
  {key, [](C& c, S v) { c.field = config_real(key, v); }, [](const C& c) { return real_text(c.field); }}
#define SFR_UINT(key, field, type) \
  {key, [](C& c, S v) { c.field = static_cast<type>(config_uint(key, v)); }, [](const C& c) { return std::to_string(c.field); }}
  static const std::vector<ConfigKey> keys = {
      {"dataset", [](C& c, S v) { c.dataset = v; }, [](const C& c) { return c.dataset; }},
      {"format",
       [](C& c, S v) {
         const auto f = parse_rating_format(v);
         if (!f) throw ConfigError("config: unknown format '" + v + "'");
         c.format = *f;
       },
       [](const C& c) { return std::string(rating_format_name(c.format)); }},
      SFR_REAL("rating_low", bounds.low),
      SFR_REAL("rating_high", bounds.high),
      SFR_REAL("threshold", threshold),
      SFR_UINT("min_support", min_support, std::size_t),
      SFR_REAL("split_fraction", split_fraction),
      SFR_UINT("split_seed", split_seed, std::uint64_t),
      {"methods", [](C& c, S v) { c.methods = parse_methods(v); }, [](const C& c) { return methods_text(c.methods); }},
      {"output_dir", [](C& c, S v) { c.output_dir = v; }, [](const C& c) { return c.output_dir; }},
      SFR_UINT("jobs", jobs, unsigned),
      SFR_REAL("p", solver.p),
      SFR_REAL("smoothing_eps", solver.smoothing_eps),
      SFR_REAL("eps_start", solver.eps_start),
      SFR_REAL("eps_shrink", solver.eps_shrink),
      SFR_UINT("max_iterations", solver.max_iterations, std::size_t),
      SFR_REAL("objective_rel_tol", solver.objective_rel_tol),
      SFR_REAL("initial_step", solver.initial_step),
      SFR_REAL("backtrack_factor", solver.backtrack_factor),
      SFR_REAL("source_tolerance", solver.source_tolerance),
      SFR_UINT("extra_starts", solver.extra_starts, std::size_t),
      SFR_REAL("start_noise", solver.start_noise),
      SFR_UINT("solver_seed", solver.seed, std::uint64_t),
      SFR_REAL("linearity_coverage", linearity.coverage),
      SFR_UINT("linearity_min_neighbors", linearity.min_neighbor_ratings, std::size_t),
  };
#undef SFR_REAL
#undef SFR_UINT
  return keys;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (!(bounds.low < bounds.high)) fail("rating_low must be below rating_high");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must be in (0, 1)");
  if (min_support < 2) fail("min_support must be >= 2");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) fail("split_fraction must be in (0, 1)");
  if (methods.empty()) fail("methods must not be empty");
  if (jobs == 0) fail("jobs must be >= 1");
  if (!(linearity.coverage > 0.0 && linearity.coverage <= 1.0)) fail("linearity_coverage must be in (0, 1]");
  SolverConfig s = solver;
  s.bounds = bounds;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

/// Names of every recognised key, in file order.
inline std::vector<std::string> config_key_names() {
  std::vector<std::string> out;
  for (const auto& k : detail::config_keys()) out.emplace_back(k.name);
  return out;
}

/// Sets one key from its text form. Unknown keys and bad values throw ConfigError.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : detail::config_keys())
    if (key == k.name) {
      k.set(cfg, value);
      return;
    }
  throw ConfigError("config: unknown key '" + key + "'");
}

inline std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
  for (const auto& k : detail::config_keys())
    if (key == k.name) return k.get(cfg);
  throw ConfigError("config: unknown key '" + key + "'");
}

/// Reads `key = value` lines over `base`; `#` starts a comment line. Does not validate.
inline ExperimentConfig read_config(std::istream& in, ExperimentConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(text.substr(0, eq)));
    const std::string value(detail::trim(text.substr(eq + 1)));
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

inline ExperimentConfig read_config(const std::string& text) {
  std::istringstream in(text);
  return read_config(in);
}

inline void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  for (const auto& k : detail::config_keys()) out << k.name << " = " << k.get(cfg) << '\n';
}

inline std::string write_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

}  // namespace sfr
