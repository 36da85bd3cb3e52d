#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sobloop::harness {

/// Raised for malformed or unknown configuration; maps to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OutputFormat { json, csv };

/// Flat key = value run configuration. Lines starting with '#' are comments.
struct RunConfig {
  std::size_t grid_size = 256;
  double s = 0.5;
  double p = 2.0;
  std::uint64_t seed = 42;
  OutputFormat output_format = OutputFormat::json;
  std::string output_path;
  /// Overrides of named check thresholds, keyed without the "tolerance." prefix.
  std::map<std::string, double> tolerances;

  // flow
  std::string system = "kdv";
  double dt = 0.0;  // 0 selects the per-system reference step
  double t_end = -1.0;  // negative selects the per-system reference horizon
  std::size_t flow_operator = 0;
  std::size_t flow_hamiltonian = 0;
  bool flow_pair_set = false;
  std::string kdv_normalization = "flow_consistent";
  std::string nls_operator = "canonical";

  // estimate-constants
  std::vector<std::size_t> grids{128, 256, 512};

  // magri
  double magri_h1_scale = 1.0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline const char* to_string(OutputFormat f) noexcept {
  return f == OutputFormat::json ? "json" : "csv";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' is out of range");
  }
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Applies one key; unknown keys and malformed values raise ConfigError.
/// known_tolerances restricts tolerance.<name> keys when non-empty.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                             const std::set<std::string>& known_tolerances = {}) {
  using detail::parse_double;
  using detail::parse_uint;
  if (key == "grid_size") {
    cfg.grid_size = parse_uint(key, value);
  } else if (key == "s") {
    cfg.s = parse_double(key, value);
  } else if (key == "p") {
    cfg.p = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value);
  } else if (key == "output_format") {
    if (value == "json") {
      cfg.output_format = OutputFormat::json;
    } else if (value == "csv") {
      cfg.output_format = OutputFormat::csv;
    } else {
      throw ConfigError("config: output_format must be json or csv, got '" + value + "'");
    }
  } else if (key == "output_path") {
    cfg.output_path = value;
  } else if (key == "system") {
    cfg.system = value;
  } else if (key == "dt") {
    cfg.dt = parse_double(key, value);
  } else if (key == "t_end") {
    cfg.t_end = parse_double(key, value);
  } else if (key == "flow_operator") {
    cfg.flow_operator = parse_uint(key, value);
    cfg.flow_pair_set = true;
  } else if (key == "flow_hamiltonian") {
    cfg.flow_hamiltonian = parse_uint(key, value);
    cfg.flow_pair_set = true;
  } else if (key == "kdv_normalization") {
    if (value != "flow_consistent" && value != "positive_dispersion") {
      throw ConfigError("config: kdv_normalization must be flow_consistent or positive_dispersion");
    }
    cfg.kdv_normalization = value;
  } else if (key == "nls_operator") {
    if (value != "canonical" && value != "derivative") {
      throw ConfigError("config: nls_operator must be canonical or derivative");
    }
    cfg.nls_operator = value;
  } else if (key == "grids") {
    std::vector<std::size_t> g;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) g.push_back(parse_uint(key, detail::trim(item)));
    if (g.empty()) throw ConfigError("config: grids must list at least one size");
    cfg.grids = g;
  } else if (key == "magri_h1_scale") {
    cfg.magri_h1_scale = parse_double(key, value);
  } else if (key.rfind("tolerance.", 0) == 0) {
    const std::string name = key.substr(10);
    if (name.empty()) throw ConfigError("config: empty tolerance name");
    if (!known_tolerances.empty() && known_tolerances.count(name) == 0) {
      throw ConfigError("config: unknown tolerance '" + name + "'");
    }
    cfg.tolerances[name] = parse_double(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

/// Checks ranges that do not depend on the subcommand.
inline void validate(const RunConfig& cfg) {
  if (cfg.grid_size < 16 || cfg.grid_size % 2 != 0) {
    throw ConfigError("config: grid_size must be an even integer >= 16");
  }
  if (!(cfg.s > 0.0 && cfg.s <= 0.5)) throw ConfigError("config: s must lie in (0, 1/2]");
  if (!(cfg.p > 1.0 && cfg.p < 1e300)) throw ConfigError("config: p must lie in (1, inf)");
  for (std::size_t n : cfg.grids) {
    if (n < 16 || n % 2 != 0) throw ConfigError("config: grids entries must be even and >= 16");
  }
  if (cfg.dt < 0.0) throw ConfigError("config: dt must be positive (0 selects the default)");
}

inline RunConfig parse_config(std::istream& in, const std::set<std::string>& known_tolerances = {}) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)),
                     known_tolerances);
  }
  validate(cfg);
  return cfg;
}

inline RunConfig load_config(const std::string& path,
                             const std::set<std::string>& known_tolerances = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in, known_tolerances);
}

/// Serialises every field so that parse_config(write_config(c)) == c.
inline std::string write_config(const RunConfig& cfg) {
  using detail::format_double;
  std::ostringstream os;
  os << "grid_size = " << cfg.grid_size << "\n";
  os << "s = " << format_double(cfg.s) << "\n";
  os << "p = " << format_double(cfg.p) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "output_format = " << to_string(cfg.output_format) << "\n";
  if (!cfg.output_path.empty()) os << "output_path = " << cfg.output_path << "\n";
  os << "system = " << cfg.system << "\n";
  os << "dt = " << format_double(cfg.dt) << "\n";
  os << "t_end = " << format_double(cfg.t_end) << "\n";
  if (cfg.flow_pair_set) {
    os << "flow_operator = " << cfg.flow_operator << "\n";
    os << "flow_hamiltonian = " << cfg.flow_hamiltonian << "\n";
  }
  os << "kdv_normalization = " << cfg.kdv_normalization << "\n";
  os << "nls_operator = " << cfg.nls_operator << "\n";
  os << "grids = ";
  for (std::size_t i = 0; i < cfg.grids.size(); ++i) os << (i ? "," : "") << cfg.grids[i];
  os << "\n";
  os << "magri_h1_scale = " << format_double(cfg.magri_h1_scale) << "\n";
  for (const auto& [k, v] : cfg.tolerances) os << "tolerance." << k << " = " << format_double(v) << "\n";
  return os.str();
}

}  // namespace sobloop::harness
