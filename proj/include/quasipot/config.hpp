#pragma once

#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasipot/landscape.hpp"

namespace quasipot {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Flat key = value configuration with dotted section names.
using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config(const std::string& text) {
  ConfigMap m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    m[key] = value;
  }
  return m;
}

inline std::string serialize_config(const ConfigMap& m) {
  std::string out;
  for (const auto& [k, v] : m) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

inline void apply_override(ConfigMap& m, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
  m[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError(key + ": '" + v + "' is not an integer");
  }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t d = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError(key + ": '" + v + "' is not an unsigned integer");
  }
}

inline Vec to_vec(const std::string& key, const std::string& v) {
  Vec out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(to_double(key, trim(tok)));
  if (out.empty()) throw ConfigError(key + ": empty vector");
  return out;
}

// Splits "name(a,b,...)" into name and numeric arguments.
inline bool parse_call(const std::string& id, std::string& name, Vec& args) {
  const auto open = id.find('(');
  if (open == std::string::npos) {
    name = id;
    args.clear();
    return true;
  }
  if (id.back() != ')') return false;
  name = id.substr(0, open);
  const std::string inner = id.substr(open + 1, id.size() - open - 2);
  args = to_vec("argument list of " + name, inner);
  return true;
}

}  // namespace detail

// Resolves a landscape id: quadratic_bowl | two_well | quadratic(c1,...,cd).
inline LossLandscape resolve_landscape(const std::string& id) {
  std::string name;
  Vec args;
  if (!detail::parse_call(id, name, args)) throw ConfigError("landscape: malformed id '" + id + "'");
  if (name == "quadratic_bowl" && args.empty()) return make_quadratic_bowl();
  if (name == "two_well" && args.empty()) return make_two_well();
  if (name == "quadratic" && !args.empty()) return make_quadratic(args);
  throw ConfigError("landscape: unknown id '" + id + "'");
}

// Resolves a diffusion id: diag(mu) | two_well_diffusion(mu1,mu2) | identity.
inline DiffusionField resolve_diffusion(const std::string& id, int dim) {
  std::string name;
  Vec args;
  if (!detail::parse_call(id, name, args)) throw ConfigError("diffusion: malformed id '" + id + "'");
  if (name == "diag" && args.size() == 1) {
    if (dim != 2) throw ConfigError("diffusion: diag(mu) requires a 2-d landscape");
    return make_diag_diffusion(args[0]);
  }
  if (name == "two_well_diffusion" && args.size() == 2) {
    if (dim != 2) throw ConfigError("diffusion: two_well_diffusion requires a 2-d landscape");
    return make_two_well_diffusion(args[0], args[1]);
  }
  if (name == "identity" && args.empty()) return make_identity_diffusion(dim);
  throw ConfigError("diffusion: unknown id '" + id + "'");
}

// Named parameter sets reproducing the published experiments.
inline ConfigMap preset_config(const std::string& name) {
  ConfigMap m;
  if (name == "fig1-anisotropic" || name == "fig1-isotropic") {
    m["command"] = "exit-time";
    m["landscape"] = "quadratic_bowl";
    m["diffusion"] = name == "fig1-anisotropic" ? "diag(1.9999)" : "diag(1)";
    m["sim.eps"] = "0.1";
    m["sim.h"] = "0.01";
    m["sim.max_steps"] = "140000";
    m["start"] = "0,0";
    m["domain.center"] = "0,0";
    m["domain.radius"] = "1";
    m["run.trials"] = "50";
    return m;
  }
  if (name == "fig2-from-O1" || name == "fig2-from-O2") {
    m["command"] = "two-well";
    m["twowell.mu1"] = "1.9999";
    m["twowell.mu2"] = "1.0001";
    m["sim.eps"] = "0.2";
    m["sim.h"] = "0.01";
    m["sim.max_steps"] = "22000";
    m["start"] = name == "fig2-from-O1" ? "-2,0" : "2,0";
    return m;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

struct ExperimentConfig {
  std::string command;
  std::string landscape_id = "quadratic_bowl";
  std::string diffusion_id = "diag(1)";
  double eps = 0.1;
  double h = 0.01;
  long max_steps = 10000;
  std::uint64_t seed = 0xC0FFEE;
  long record_every = 10;
  int trials = 50;
  int threads = 1;
  Vec start{0.0, 0.0};
  Vec domain_center{0.0, 0.0};
  double domain_radius = 1.0;
  std::optional<double> gamma_radius;  // default: 0.1 * radius
  std::optional<double> Gamma_radius;  // default: 0.2 * radius
  std::string out_dir = "out";
  // mam
  Vec mam_end{1.0, 0.0};
  int mam_n_points = 100;
  int mam_max_iters = 20000;
  double mam_step_size = 1e-3;
  double mam_tol = 1e-8;
  // hj-check
  std::string hj_candidate = "example31";  // or "2f"
  double hj_mu = 1.0;
  int hj_samples = 1000;
  // two-well
  double tw_mu1 = 1.9999;
  double tw_mu2 = 1.0001;
  long tw_cycles = 0;  // 0: skip transition counting
  // phi histogram grid
  int grid_nx = 80;
  int grid_ny = 40;
  Vec grid_x{-4.0, 4.0};
  Vec grid_y{-2.0, 2.0};
  // diffusion-estimate
  int de_n = 4;
  int de_m = 2;
  Vec de_point{0.0, 0.0};

  ConfigMap raw;  // the map this config was built from, for serialization
};

inline ExperimentConfig config_from_map(const ConfigMap& m) {
  using namespace detail;
  ExperimentConfig c;
  c.raw = m;
  for (const auto& [key, v] : m) {
    if (key == "command") c.command = v;
    else if (key == "landscape") c.landscape_id = v;
    else if (key == "diffusion") c.diffusion_id = v;
    else if (key == "sim.eps") c.eps = to_double(key, v);
    else if (key == "sim.h") c.h = to_double(key, v);
    else if (key == "sim.max_steps") c.max_steps = to_long(key, v);
    else if (key == "sim.seed") c.seed = to_u64(key, v);
    else if (key == "sim.record_every") c.record_every = to_long(key, v);
    else if (key == "run.trials") c.trials = static_cast<int>(to_long(key, v));
    else if (key == "run.threads") c.threads = static_cast<int>(to_long(key, v));
    else if (key == "start") c.start = to_vec(key, v);
    else if (key == "domain.center") c.domain_center = to_vec(key, v);
    else if (key == "domain.radius") c.domain_radius = to_double(key, v);
    else if (key == "domain.gamma") c.gamma_radius = to_double(key, v);
    else if (key == "domain.Gamma") c.Gamma_radius = to_double(key, v);
    else if (key == "out.dir") c.out_dir = v;
    else if (key == "mam.end") c.mam_end = to_vec(key, v);
    else if (key == "mam.n_points") c.mam_n_points = static_cast<int>(to_long(key, v));
    else if (key == "mam.max_iters") c.mam_max_iters = static_cast<int>(to_long(key, v));
    else if (key == "mam.step_size") c.mam_step_size = to_double(key, v);
    else if (key == "mam.tol") c.mam_tol = to_double(key, v);
    else if (key == "hj.candidate") c.hj_candidate = v;
    else if (key == "hj.mu") c.hj_mu = to_double(key, v);
    else if (key == "hj.samples") c.hj_samples = static_cast<int>(to_long(key, v));
    else if (key == "twowell.mu1") c.tw_mu1 = to_double(key, v);
    else if (key == "twowell.mu2") c.tw_mu2 = to_double(key, v);
    else if (key == "twowell.cycles") c.tw_cycles = to_long(key, v);
    else if (key == "grid.nx") c.grid_nx = static_cast<int>(to_long(key, v));
    else if (key == "grid.ny") c.grid_ny = static_cast<int>(to_long(key, v));
    else if (key == "grid.x") c.grid_x = to_vec(key, v);
    else if (key == "grid.y") c.grid_y = to_vec(key, v);
    else if (key == "estimate.n") c.de_n = static_cast<int>(to_long(key, v));
    else if (key == "estimate.m") c.de_m = static_cast<int>(to_long(key, v));
    else if (key == "estimate.point") c.de_point = to_vec(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  // environment override for the output directory
  if (const char* env = std::getenv("QUASIPOT_OUTDIR"); env != nullptr && *env != '\0')
    c.out_dir = env;
  return c;
}

}  // namespace quasipot
