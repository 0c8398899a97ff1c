#pragma once

// Run configuration: strict JSON ingestion with defaults, and the echo that
// goes back into every summary.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pbl/discretization.hpp"
#include "pbl/error.hpp"
#include "pbl/oracle.hpp"

namespace pbl {

using ojson = nlohmann::ordered_json;

enum class RunMode { single, sweep, crosscheck, identities };

inline std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::single: return "single";
    case RunMode::sweep: return "sweep";
    case RunMode::crosscheck: return "crosscheck";
    case RunMode::identities: return "identities";
  }
  return "single";
}

inline RunMode parse_mode(std::string_view s) {
  if (s == "single" || s == "solve") return RunMode::single;
  if (s == "sweep") return RunMode::sweep;
  if (s == "crosscheck") return RunMode::crosscheck;
  if (s == "identities") return RunMode::identities;
  throw Error(ErrorKind::parse, "config: unknown mode '" + std::string(s) +
                                    "' (expected single, sweep, crosscheck or identities)");
}

struct GeometryConfig {
  std::string kind = "disk";  ///< disk | ellipse | custom
  double R = 1.0;
  double a = 2.0;
  std::string file;           ///< custom: "L <value>" header, then q_e samples
  bool operator==(const GeometryConfig&) const = default;
};

struct ForcingConfig {
  double epsilon = 0.0;
  std::vector<double> cos{1.0};  ///< g = sum a_k cos(2 pi k s/L) + b_k sin(2 pi k s/L), k >= 1
  std::vector<double> sin;
  std::string file;              ///< optional: N_s samples of g, one per line
  bool operator==(const ForcingConfig&) const = default;
};

struct GridConfig {
  int N_s = 128;
  int N_psi = 301;
  double psi_max = 30.0;
  bool operator==(const GridConfig&) const = default;
};

struct SolverConfig {
  double tol = 1e-10;
  int max_iter = 50;
  double compatibility_tol = 1e-8;
  double safety_factor = 0.05;
  bool enforce_safety_bound = false;
  bool operator==(const SolverConfig&) const = default;
};

struct OracleConfig {
  bool enabled = false;
  MarchConfig march;
  bool operator==(const OracleConfig& o) const {
    const auto& a = march;
    const auto& b = o.march;
    return enabled == o.enabled && a.steps_per_period == b.steps_per_period && a.theta == b.theta &&
           a.poincare_max_iters == b.poincare_max_iters && a.poincare_tol == b.poincare_tol &&
           a.anderson_depth == b.anderson_depth && a.shoot_tol == b.shoot_tol &&
           a.shoot_bracket == b.shoot_bracket && a.bracket_eps_factor == b.bracket_eps_factor &&
           a.bracket_min_halfwidth == b.bracket_min_halfwidth;
  }
};

struct RunConfig {
  RunMode mode = RunMode::single;
  GeometryConfig geometry;
  ForcingConfig forcing;
  GridConfig grid;
  SolverConfig solver;
  OracleConfig oracle;
  std::vector<double> sweep_epsilons;
  double crosscheck_tol = 1e-6;
  std::string output_dir = "pbl_out";
  std::string base_dir;  ///< relative file paths resolve against this; not echoed
  bool operator==(const RunConfig& o) const {
    return mode == o.mode && geometry == o.geometry && forcing == o.forcing && grid == o.grid &&
           solver == o.solver && oracle == o.oracle && sweep_epsilons == o.sweep_epsilons &&
           crosscheck_tol == o.crosscheck_tol && output_dir == o.output_dir;
  }
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::parse, "config: field '" + path + "': " + msg);
}

inline void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& allowed) {
  if (!obj.is_object()) config_error(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key))
      throw Error(ErrorKind::parse, "config: unknown key '" + (prefix.empty() ? key : prefix + "." + key) + "'");
  }
}

inline std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void read_number(const json& obj, const std::string& prefix, const std::string& key, double& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number()) config_error(join(prefix, key), "expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) config_error(join(prefix, key), "must be finite");
}

inline void read_int(const json& obj, const std::string& prefix, const std::string& key, int& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) config_error(join(prefix, key), "expected an integer");
  out = v.get<int>();
}

inline void read_bool(const json& obj, const std::string& prefix, const std::string& key, bool& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) config_error(join(prefix, key), "expected true or false");
  out = v.get<bool>();
}

inline void read_string(const json& obj, const std::string& prefix, const std::string& key, std::string& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_string()) config_error(join(prefix, key), "expected a string");
  out = v.get<std::string>();
}

inline void read_numbers(const json& obj, const std::string& prefix, const std::string& key,
                         std::vector<double>& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_array()) config_error(join(prefix, key), "expected a list of numbers");
  out.clear();
  for (const auto& x : v) {
    if (!x.is_number()) config_error(join(prefix, key), "expected a list of numbers");
    out.push_back(x.get<double>());
    if (!std::isfinite(out.back())) config_error(join(prefix, key), "must be finite");
  }
}

inline std::string resolve_path(const std::string& base, const std::string& file) {
  if (file.empty()) return file;
  std::filesystem::path p(file);
  if (p.is_absolute() || base.empty()) return p.string();
  return (std::filesystem::path(base) / p).string();
}

}  // namespace detail

inline std::string resolved_path(const RunConfig& cfg, const std::string& file) {
  return detail::resolve_path(cfg.base_dir, file);
}

/// Checks ranges and referenced files; parse_config calls this.
inline void validate(const RunConfig& c) {
  const auto& g = c.geometry;
  if (g.kind != "disk" && g.kind != "ellipse" && g.kind != "custom")
    detail::config_error("geometry.kind", "expected disk, ellipse or custom, got '" + g.kind + "'");
  if (g.kind == "disk" && !(g.R > 0.0)) detail::config_error("geometry.R", "disk radius must be positive");
  if (g.kind == "ellipse" && !(g.a >= 1.0)) detail::config_error("geometry.a", "ellipse semi-axis must be >= 1");
  if (g.kind == "custom") {
    if (g.file.empty()) detail::config_error("geometry.file", "custom geometry needs a file");
    if (!std::filesystem::exists(resolved_path(c, g.file)))
      throw Error(ErrorKind::io, "config: geometry file '" + resolved_path(c, g.file) + "' does not exist");
  }
  if (!(c.forcing.epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be nonnegative");
  if (!c.forcing.file.empty() && !std::filesystem::exists(resolved_path(c, c.forcing.file)))
    throw Error(ErrorKind::io, "config: forcing file '" + resolved_path(c, c.forcing.file) + "' does not exist");
  if (c.grid.N_s < 8 || c.grid.N_s % 2 != 0) detail::config_error("grid.N_s", "must be even and at least 8");
  if (c.grid.N_psi < 5) detail::config_error("grid.N_psi", "must be at least 5");
  if (!(c.grid.psi_max >= kMinPsiMax)) detail::config_error("grid.psi_max", "must be at least 20");
  if (!(c.solver.tol > 0.0)) detail::config_error("solver.tol", "must be positive");
  if (c.solver.max_iter < 1) detail::config_error("solver.max_iter", "must be at least 1");
  if (!(c.solver.compatibility_tol > 0.0)) detail::config_error("solver.compatibility_tol", "must be positive");
  if (!(c.solver.safety_factor > 0.0)) detail::config_error("solver.safety_factor", "must be positive");
  try {
    validate(c.oracle.march);
  } catch (const Error& e) {
    throw Error(ErrorKind::parse, std::string("config: oracle: ") + e.what());
  }
  if (c.mode == RunMode::sweep && c.sweep_epsilons.empty())
    detail::config_error("sweep.epsilons", "sweep mode needs a non-empty list");
  for (double e : c.sweep_epsilons)
    if (!(e >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be nonnegative");
  if (!(c.crosscheck_tol > 0.0)) detail::config_error("crosscheck.tolerance", "must be positive");
}

/// Strict parse: unknown keys and wrong types are errors naming the field;
/// JSON syntax errors carry line and column. Missing fields take defaults.
inline RunConfig parse_config(std::string_view text, const std::string& base_dir = "") {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("config: ") + e.what());
  }
  RunConfig c;
  c.base_dir = base_dir;
  detail::reject_unknown(root, "", {"mode", "geometry", "forcing", "grid", "solver", "oracle", "sweep",
                                    "crosscheck", "output_dir"});
  std::string mode = "single";
  detail::read_string(root, "", "mode", mode);
  c.mode = parse_mode(mode);
  detail::read_string(root, "", "output_dir", c.output_dir);

  if (root.contains("geometry")) {
    const auto& g = root.at("geometry");
    detail::reject_unknown(g, "geometry", {"kind", "R", "a", "file"});
    detail::read_string(g, "geometry", "kind", c.geometry.kind);
    detail::read_number(g, "geometry", "R", c.geometry.R);
    detail::read_number(g, "geometry", "a", c.geometry.a);
    detail::read_string(g, "geometry", "file", c.geometry.file);
  }
  if (root.contains("forcing")) {
    const auto& f = root.at("forcing");
    detail::reject_unknown(f, "forcing", {"epsilon", "cos", "sin", "file"});
    detail::read_number(f, "forcing", "epsilon", c.forcing.epsilon);
    detail::read_numbers(f, "forcing", "cos", c.forcing.cos);
    detail::read_numbers(f, "forcing", "sin", c.forcing.sin);
    detail::read_string(f, "forcing", "file", c.forcing.file);
    if (!c.forcing.file.empty() && (f.contains("cos") || f.contains("sin")))
      detail::config_error("forcing.file", "give either a sample file or coefficients, not both");
  }
  if (root.contains("grid")) {
    const auto& g = root.at("grid");
    detail::reject_unknown(g, "grid", {"N_s", "N_psi", "psi_max"});
    detail::read_int(g, "grid", "N_s", c.grid.N_s);
    detail::read_int(g, "grid", "N_psi", c.grid.N_psi);
    detail::read_number(g, "grid", "psi_max", c.grid.psi_max);
  }
  if (root.contains("solver")) {
    const auto& s = root.at("solver");
    detail::reject_unknown(s, "solver", {"tol", "max_iter", "compatibility_tol", "safety_factor",
                                         "enforce_safety_bound"});
    detail::read_number(s, "solver", "tol", c.solver.tol);
    detail::read_int(s, "solver", "max_iter", c.solver.max_iter);
    detail::read_number(s, "solver", "compatibility_tol", c.solver.compatibility_tol);
    detail::read_number(s, "solver", "safety_factor", c.solver.safety_factor);
    detail::read_bool(s, "solver", "enforce_safety_bound", c.solver.enforce_safety_bound);
  }
  if (root.contains("oracle")) {
    const auto& o = root.at("oracle");
    auto& m = c.oracle.march;
    detail::reject_unknown(o, "oracle", {"enabled", "steps_per_period", "theta", "poincare_max_iters",
                                         "poincare_tol", "anderson_depth", "shoot_tol", "shoot_bracket",
                                         "bracket_eps_factor", "bracket_min_halfwidth"});
    detail::read_bool(o, "oracle", "enabled", c.oracle.enabled);
    detail::read_int(o, "oracle", "steps_per_period", m.steps_per_period);
    detail::read_number(o, "oracle", "theta", m.theta);
    detail::read_int(o, "oracle", "poincare_max_iters", m.poincare_max_iters);
    detail::read_number(o, "oracle", "poincare_tol", m.poincare_tol);
    detail::read_int(o, "oracle", "anderson_depth", m.anderson_depth);
    detail::read_number(o, "oracle", "shoot_tol", m.shoot_tol);
    detail::read_number(o, "oracle", "bracket_eps_factor", m.bracket_eps_factor);
    detail::read_number(o, "oracle", "bracket_min_halfwidth", m.bracket_min_halfwidth);
    if (o.contains("shoot_bracket") && !o.at("shoot_bracket").is_null()) {
      std::vector<double> b;
      detail::read_numbers(o, "oracle", "shoot_bracket", b);
      if (b.size() != 2) detail::config_error("oracle.shoot_bracket", "expected [omega_lo, omega_hi]");
      m.shoot_bracket = std::pair{b[0], b[1]};
    }
  }
  if (root.contains("sweep")) {
    const auto& s = root.at("sweep");
    detail::reject_unknown(s, "sweep", {"epsilons"});
    detail::read_numbers(s, "sweep", "epsilons", c.sweep_epsilons);
  }
  if (root.contains("crosscheck")) {
    const auto& s = root.at("crosscheck");
    detail::reject_unknown(s, "crosscheck", {"tolerance"});
    detail::read_number(s, "crosscheck", "tolerance", c.crosscheck_tol);
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

/// Fully resolved configuration, defaults included, in a fixed key order.
/// parse_config(config_to_json(c).dump()) reproduces c.
inline ojson config_to_json(const RunConfig& c) {
  ojson j;
  j["mode"] = std::string(to_string(c.mode));
  j["geometry"] = ojson{{"kind", c.geometry.kind}, {"R", c.geometry.R}, {"a", c.geometry.a}};
  if (!c.geometry.file.empty()) j["geometry"]["file"] = c.geometry.file;
  j["forcing"] = ojson{{"epsilon", c.forcing.epsilon}};
  if (c.forcing.file.empty()) {
    j["forcing"]["cos"] = c.forcing.cos;
    j["forcing"]["sin"] = c.forcing.sin;
  } else {
    j["forcing"]["file"] = c.forcing.file;
  }
  j["grid"] = ojson{{"N_s", c.grid.N_s}, {"N_psi", c.grid.N_psi}, {"psi_max", c.grid.psi_max}};
  j["solver"] = ojson{{"tol", c.solver.tol},
                      {"max_iter", c.solver.max_iter},
                      {"compatibility_tol", c.solver.compatibility_tol},
                      {"safety_factor", c.solver.safety_factor},
                      {"enforce_safety_bound", c.solver.enforce_safety_bound}};
  const auto& m = c.oracle.march;
  j["oracle"] = ojson{{"enabled", c.oracle.enabled},
                      {"steps_per_period", m.steps_per_period},
                      {"theta", m.theta},
                      {"poincare_max_iters", m.poincare_max_iters},
                      {"poincare_tol", m.poincare_tol},
                      {"anderson_depth", m.anderson_depth},
                      {"shoot_tol", m.shoot_tol},
                      {"shoot_bracket", nullptr},
                      {"bracket_eps_factor", m.bracket_eps_factor},
                      {"bracket_min_halfwidth", m.bracket_min_halfwidth}};
  if (m.shoot_bracket) j["oracle"]["shoot_bracket"] = {m.shoot_bracket->first, m.shoot_bracket->second};
  j["sweep"] = ojson{{"epsilons", c.sweep_epsilons}};
  j["crosscheck"] = ojson{{"tolerance", c.crosscheck_tol}};
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace pbl
