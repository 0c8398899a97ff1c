#pragma once

// Run orchestration: the four modes, their summaries and output files.
//
// Files written into the output directory:
//   summary.json   ordered, deterministic record (config echo included)
//   timing.json    wall-clock times (kept apart so summaries stay bit-identical)
//   trace.tsv      one row per Picard iteration
//   field.txt      Q dump, "# s psi Q" then one triple per line
//   heatmap.tsv    the same triples with a blank line after each s row
//   sweep.tsv      sweep mode: one row per epsilon
//   error.json     on failure: kind, message, offending value
// Sweep entries write their own files under eps_<index>/.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pbl/config.hpp"
#include "pbl/fl_iteration.hpp"
#include "pbl/geometry.hpp"
#include "pbl/linear_solver.hpp"
#include "pbl/nonlinearity.hpp"
#include "pbl/norms.hpp"
#include "pbl/oracle.hpp"

namespace pbl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitRunError = 2;
inline constexpr int kExitConfigError = 3;

inline const std::vector<double>& identity_psi_samples() {
  static const std::vector<double> v{0.0, 0.5, 1.0, 2.0, 5.0};
  return v;
}

struct RunOptions {
  std::optional<std::string> output_dir;  ///< overrides the config
  unsigned workers = 1;
  bool verbose = false;
  bool write_files = true;
};

struct RunOutcome {
  ojson summary;
  ojson timing;
  int exit_code = kExitOk;
};

/// Default worker count: PBL_WORKERS if set to a positive integer, else 1.
inline unsigned default_workers() {
  if (const char* env = std::getenv("PBL_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return 1;
}

inline ojson error_record(const Error& e) {
  ojson j;
  j["kind"] = std::string(to_string(e.kind()));
  j["message"] = e.what();
  j["value"] = std::isfinite(e.value()) ? ojson(e.value()) : ojson(nullptr);
  return j;
}

namespace detail {

class Checks {
 public:
  void add(const std::string& name, double value, double tolerance, bool passed) {
    ojson c;
    c["name"] = name;
    c["value"] = std::isfinite(value) ? ojson(value) : ojson(nullptr);
    c["tolerance"] = tolerance;
    c["passed"] = passed;
    list_.push_back(c);
    all_ &= passed;
  }
  void below(const std::string& name, double value, double tolerance) {
    add(name, value, tolerance, std::abs(value) < tolerance);
  }
  bool passed() const { return all_; }
  ojson json() const { return list_; }

 private:
  ojson list_ = ojson::array();
  bool all_ = true;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    den += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return num / den;
}

inline std::vector<double> read_sample_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open forcing file '" + path + "'");
  std::vector<double> v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    v.push_back(parse_strict_double(tok, line_no));
    if (ls >> tok) throw Error(ErrorKind::parse, "forcing file line " + std::to_string(line_no) + ": trailing data");
  }
  return v;
}

}  // namespace detail

/// Slope of log y against log x by least squares; requires at least two
/// positive pairs.
inline std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  if (xs.size() < 2) return std::nullopt;
  return detail::log_slope(xs, ys);
}

inline Grid build_grid(const RunConfig& c) {
  return Grid::uniform(static_cast<std::size_t>(c.grid.N_s), static_cast<std::size_t>(c.grid.N_psi), c.grid.psi_max);
}

inline BoundaryGeometry build_geometry(const RunConfig& c) {
  const auto n = static_cast<std::size_t>(c.grid.N_s);
  if (c.geometry.kind == "disk") return disk_geometry(c.geometry.R, n);
  if (c.geometry.kind == "ellipse") return ellipse_geometry(c.geometry.a, n);
  auto g = load_geometry_table(resolved_path(c, c.geometry.file));
  if (g.size() != n)
    throw Error(ErrorKind::invalid_argument, "custom geometry has " + std::to_string(g.size()) +
                                                 " samples but grid.N_s = " + std::to_string(n));
  return g;
}

/// g on the geometry's grid; sample files with energy near the Nyquist band
/// produce a warning.
inline std::vector<double> build_forcing_profile(const RunConfig& c, const BoundaryGeometry& geo,
                                                 std::vector<std::string>& warnings) {
  if (c.forcing.file.empty()) return trig_profile(geo, c.forcing.cos, c.forcing.sin);
  auto g = detail::read_sample_file(resolved_path(c, c.forcing.file));
  if (g.size() != geo.size())
    throw Error(ErrorKind::invalid_argument, "forcing file has " + std::to_string(g.size()) +
                                                 " samples but grid.N_s = " + std::to_string(geo.size()));
  const auto spec = rfft(g);
  double top = 0.0, high = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    top = std::max(top, std::abs(spec[k]));
    if (k > geo.size() / 4) high = std::max(high, std::abs(spec[k]));
  }
  if (top > 0.0 && high > 1e-8 * top)
    warnings.push_back("forcing samples are not band-limited: modes above N_s/4 carry relative amplitude " +
                       format_double(high / top));
  return g;
}

inline std::string trace_table(const IterationTrace& t) {
  std::ostringstream os;
  os << "n\tomega0\tq_norm\tdq_norm\td_omega\td_omega_bar\tcompatibility\tpde_residual\tratio\n";
  for (const auto& r : t.rows) {
    os << r.n << '\t' << format_double(r.omega0) << '\t' << format_double(r.q_norm) << '\t'
       << format_double(r.dq_norm) << '\t' << format_double(r.d_omega) << '\t' << format_double(r.d_omega_bar)
       << '\t' << format_double(r.compatibility) << '\t' << format_double(r.pde_residual) << '\t'
       << (r.ratio ? format_double(*r.ratio) : std::string("nan")) << '\n';
  }
  return os.str();
}

/// Picard solve (plus optional oracle) for one epsilon. Returns the summary
/// record; files go to dir when it is set.
inline ojson solve_case(const RunConfig& cfg, double epsilon, const std::optional<std::filesystem::path>& dir,
                        bool run_oracle, ojson& timing) {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid grid = build_grid(cfg);
  const BoundaryGeometry geo = build_geometry(cfg);
  std::vector<std::string> warnings;
  const SlipForcing forcing = make_forcing(geo, epsilon, build_forcing_profile(cfg, geo, warnings));

  PicardOptions opt;
  opt.tol = cfg.solver.tol;
  opt.max_iter = cfg.solver.max_iter;
  opt.compatibility_tol = cfg.solver.compatibility_tol;
  opt.safety_factor = cfg.solver.safety_factor;
  opt.enforce_safety_bound = cfg.solver.enforce_safety_bound;
  const PicardResult res = picard_iterate(geo, forcing, grid, opt);
  timing["picard_seconds"] = detail::seconds_since(t0);
  if (res.trace.safety_bound_exceeded)
    warnings.push_back("epsilon exceeds the small-data safety bound " + format_double(res.trace.safety_bound));

  const double w = res.state.omega0;
  const auto x14 = xkm_norm_detail(res.Q, grid, geo.length, {1, 4});
  const auto x250 = xkm_norm_detail(res.Q, grid, geo.length, {2, 50});
  const double compat = compatibility_residual(res.Q, w, forcing, geo, grid);
  const auto pde = pde_residual(res.Q, w, geo, grid);
  const auto& psis = identity_psi_samples();
  const auto pointwise = pointwise_identity_residual(res.Q, w, geo, grid, psis);
  const auto N = big_N(res.Q, w, geo);
  double n_max = 0.0;
  for (double v : N) n_max = std::max(n_max, std::abs(v));

  ojson s;
  s["epsilon"] = epsilon;
  s["omega0"] = w;
  s["omega0_leading"] = fl_leading(forcing.f_slip, geo);
  if (cfg.geometry.kind == "disk") s["omega0_wood"] = wood_disk(forcing.f_slip, cfg.geometry.R);
  s["omega_bar"] = res.state.omega_bar;
  s["omega_bar_star"] = res.state.omega_bar_star;
  s["omega_bar_err"] = res.state.omega_bar_err;
  s["omega_err"] = res.state.omega_err;
  s["norm_X14"] = x14.value;
  s["norm_X250_log"] = std::isfinite(x250.log_value) ? ojson(x250.log_value) : ojson(nullptr);
  s["norm_X250_tail_fraction"] = x250.tail_fraction;
  s["max_abs_Q"] = res.Q.max_abs();
  s["max_abs_N"] = n_max;
  s["compatibility_residual"] = compat;
  s["pde_residual_max"] = pde.max;
  s["pde_residual_l2"] = pde.l2;
  s["pointwise_identity"] = ojson{{"psi", psis}, {"residual", pointwise}};
  s["iterations"] = res.trace.rows.size();
  s["converged"] = res.trace.converged;
  s["contraction_ratios"] = res.trace.contraction_ratios();
  s["safety_bound"] = std::isfinite(res.trace.safety_bound) ? ojson(res.trace.safety_bound) : ojson(nullptr);
  s["safety_bound_exceeded"] = res.trace.safety_bound_exceeded;
  s["grid"] = ojson{{"N_s", grid.n_s()},
                    {"N_psi", grid.n_psi()},
                    {"psi_max", grid.psi_max()},
                    {"h_psi", grid.psi_nodes()[1]},
                    {"length", geo.length}};

  detail::Checks checks;
  checks.add("converged", res.trace.converged ? 0.0 : 1.0, 0.0, res.trace.converged);
  checks.add("omega0_positive", w, 0.0, w > 0.0);
  checks.below("compatibility_residual", compat, cfg.solver.compatibility_tol);
  double pw = 0.0;
  for (double v : pointwise) pw = std::max(pw, std::abs(v));
  checks.below("pointwise_identity", pw, 10.0 * cfg.solver.compatibility_tol);
  if (cfg.geometry.kind == "disk") checks.below("wood_agreement", w - s["omega0_wood"].get<double>(), 1e-8);

  if (run_oracle) {
    const auto t1 = std::chrono::steady_clock::now();
    const ShootResult sh = shoot_omega(forcing, geo, grid, cfg.oracle.march);
    timing["oracle_seconds"] = detail::seconds_since(t1);
    ojson o;
    o["omega0"] = sh.omega0;
    o["difference"] = sh.omega0 - w;
    o["evaluations"] = sh.evaluations;
    o["bracket"] = {sh.bracket.first, sh.bracket.second};
    o["drift_at_root"] = sh.periodic.drift;
    o["period_drift_at_root"] = sh.periodic.period_drift;
    o["poincare_periods"] = sh.periodic.periods;
    if (sh.periodic.field.n_s() == grid.n_s())
      o["pde_residual_max"] = pde_residual(sh.periodic.field, sh.omega0, geo, grid).max;
    ojson samples = ojson::array();
    for (const auto& [om, r] : sh.samples) samples.push_back({om, r});
    o["samples"] = samples;
    s["oracle"] = o;
    checks.below("oracle_agreement", sh.omega0 - w, cfg.crosscheck_tol);
    if (cfg.geometry.kind == "disk")
      checks.below("oracle_wood_agreement", sh.omega0 - s["omega0_wood"].get<double>(), cfg.crosscheck_tol);
  }

  s["warnings"] = warnings;
  s["checks"] = checks.json();
  s["passed"] = checks.passed();

  if (dir) {
    std::filesystem::create_directories(*dir);
    detail::write_text(*dir / "trace.tsv", trace_table(res.trace));
    {
      std::ostringstream os;
      write_field_dump(os, geo.s_grid, grid.psi_nodes(), res.Q);
      detail::write_text(*dir / "field.txt", os.str());
    }
    {
      std::ostringstream os;
      write_field_dump(os, geo.s_grid, grid.psi_nodes(), res.Q, true);
      detail::write_text(*dir / "heatmap.tsv", os.str());
    }
  }
  timing["total_seconds"] = detail::seconds_since(t0);
  return s;
}

// ---------------------------------------------------------------------------
// identities mode
// ---------------------------------------------------------------------------

namespace detail {

// Q = e^{-psi}(1 + cos(2 pi s/L)/2) with its exact source and a constant shift
// in b making the discrete zero mode compatible.
inline LinearProblem manufactured_problem(const BoundaryGeometry& geo, const Grid& grid, double omega) {
  const double L = geo.length;
  const double k = 2 * std::numbers::pi / L;
  LinearProblem p{geo, omega, Field(grid), Field(), std::vector<double>(grid.n_s())};
  for (std::size_t i = 0; i < grid.n_s(); ++i) {
    const double s = geo.s_grid[i];
    for (std::size_t j = 0; j < grid.n_psi(); ++j) {
      const double e = std::exp(-grid.psi_nodes()[j]);
      p.F(i, j) = -0.5 * k * std::sin(k * s) * e - omega * geo.q_e[i] * e * (1 + 0.5 * std::cos(k * s));
    }
    p.b[i] = 1 + 0.5 * std::cos(k * s);
  }
  std::vector<double> q3(geo.size());
  for (std::size_t i = 0; i < q3.size(); ++i) q3[i] = std::pow(geo.q_e[i], 3);
  const double res = linear_compatibility_residual(p.F, p.G, p.b, geo, omega, grid);
  const double shift = -res * integrate_s(q3, L) / integrate_s(geo.q_e, L);
  for (double& v : p.b) v += shift;
  return p;
}

inline double manufactured_error(const BoundaryGeometry& geo, std::size_t n_psi, double psi_max) {
  const auto grid = Grid::uniform(geo.size(), n_psi, psi_max);
  const auto p = manufactured_problem(geo, grid, 1.0);
  const auto Q = solve_linear(p, grid);
  const double k = 2 * std::numbers::pi / geo.length;
  double err = 0.0;
  for (std::size_t i = 0; i < grid.n_s(); ++i)
    for (std::size_t j = 0; j < grid.n_psi(); ++j) {
      const double exact = std::exp(-grid.psi_nodes()[j]) * (1 + 0.5 * std::cos(k * geo.s_grid[i]));
      err = std::max(err, std::abs(Q(i, j) - exact));
    }
  return err;
}

}  // namespace detail

/// Pure-data modes through the full solver: b(s) = cos(xi J(s)) with F = 0
/// must give Q = Re(e^{i xi J(s)} e^{-mu psi}), so |V_hat| = e^{-sqrt(xi/2) psi}.
inline double kernel_mode_error(const BoundaryGeometry& geo, const Grid& grid, double omega,
                                std::initializer_list<int> modes) {
  const TMap tm = build_t_map(geo, omega);
  double worst = 0.0;
  for (int k : modes) {
    const double xi = 2 * std::numbers::pi * k / tm.L_t;
    LinearProblem p{geo, omega, Field(grid), Field(), std::vector<double>(geo.size())};
    for (std::size_t i = 0; i < geo.size(); ++i) p.b[i] = std::cos(xi * tm.J_samples[i]);
    const Field Q = solve_linear(p, grid);
    const double decay = std::sqrt(xi / 2);
    for (std::size_t i = 0; i < geo.size(); ++i)
      for (std::size_t j = 0; j < grid.n_psi(); ++j) {
        const double psi = grid.psi_nodes()[j];
        const double exact = std::exp(-decay * psi) * std::cos(xi * tm.J_samples[i] - decay * psi);
        worst = std::max(worst, std::abs(Q(i, j) - exact));
      }
  }
  return worst;
}

inline ojson identities_report(const RunConfig& cfg, detail::Checks& checks) {
  ojson out;
  const auto& g = cfg.geometry;
  if (g.kind == "custom")
    throw Error(ErrorKind::invalid_argument, "identities mode needs a disk or ellipse geometry (no embedding for tables)");
  const BoundaryEmbedding e = g.kind == "disk" ? BoundaryEmbedding::disk(g.R) : BoundaryEmbedding::ellipse(g.a);

  // Unit vorticity of the background stream function.
  const double a = g.kind == "disk" ? 1.0 : g.a;
  const auto uv = verify_unit_vorticity(a, 1e-10);
  out["unit_vorticity"] = ojson{{"a", a},
                                {"laplacian_residual", uv.laplacian_residual},
                                {"normal_velocity", uv.normal_velocity}};
  checks.below("unit_vorticity", uv.max(), 1e-10);

  // Curvilinear identities under h-refinement.
  auto u = [](Vec2 p) { return Vec2{std::sin(p.y) + p.x * p.y, std::cos(p.x) * p.y * p.y}; };
  const double collar = 0.1 / e.max_abs_curvature();
  const double hs[2] = {0.02, 0.01};
  IdentityResiduals r[2];
  for (int i = 0; i < 2; ++i) r[i] = curvilinear_identity_check(e, u, hs[i], collar);
  auto order = [&](auto member) { return std::log2(r[0].*member / r[1].*member); };
  ojson ids;
  const std::pair<const char*, double IdentityResiduals::*> names[] = {
      {"advection_tangential", &IdentityResiduals::advection_tangential},
      {"advection_normal", &IdentityResiduals::advection_normal},
      {"laplacian_tangential", &IdentityResiduals::laplacian_tangential},
      {"divergence", &IdentityResiduals::divergence},
      {"curl", &IdentityResiduals::curl}};
  for (const auto& [name, member] : names) {
    const double o = order(member);
    ids[name] = ojson{{"h", {hs[0], hs[1]}}, {"residual", {r[0].*member, r[1].*member}}, {"order", o}};
    checks.add(std::string("identity_order_") + name, o, 0.2, std::abs(o - 2.0) <= 0.2);
  }
  out["curvilinear"] = ids;
  out["collar"] = collar;

  // Linear solver: manufactured solution under two psi refinements.
  const auto geo = build_geometry(cfg);
  const std::size_t sizes[3] = {151, 301, 601};
  std::vector<double> errs, orders;
  for (std::size_t n : sizes) errs.push_back(detail::manufactured_error(geo, n, cfg.grid.psi_max));
  for (std::size_t i = 1; i < errs.size(); ++i) orders.push_back(std::log2(errs[i - 1] / errs[i]));
  out["manufactured"] = ojson{{"N_psi", {sizes[0], sizes[1], sizes[2]}}, {"error", errs}, {"order", orders}};
  for (std::size_t i = 0; i < orders.size(); ++i)
    checks.add("manufactured_order_" + std::to_string(i + 1), orders[i], 0.2, std::abs(orders[i] - 2.0) <= 0.2);

  const double kerr = kernel_mode_error(geo, build_grid(cfg), 1.0, {1, 2, 5});
  out["kernel_mode_error"] = kerr;
  checks.below("kernel_mode", kerr, 1e-10);
  return out;
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

inline std::filesystem::path output_root(const RunConfig& cfg, const RunOptions& opt) {
  return opt.output_dir ? std::filesystem::path(*opt.output_dir) : std::filesystem::path(cfg.output_dir);
}

inline RunOutcome run(const RunConfig& cfg, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto root = output_root(cfg, opt);
  auto log = [&](const std::string& msg) {
    if (opt.verbose) std::cerr << "[pbl] " << msg << '\n';
  };
  RunOutcome out;
  ojson& s = out.summary;
  s["mode"] = std::string(to_string(cfg.mode));
  std::optional<std::filesystem::path> dir;
  if (opt.write_files) {
    std::filesystem::create_directories(root);
    dir = root;
  }

  try {
    switch (cfg.mode) {
      case RunMode::single:
      case RunMode::crosscheck: {
        const bool oracle = cfg.mode == RunMode::crosscheck || cfg.oracle.enabled;
        log("solving epsilon = " + format_double(cfg.forcing.epsilon) + (oracle ? " with oracle" : ""));
        ojson timing;
        s["result"] = solve_case(cfg, cfg.forcing.epsilon, dir, oracle, timing);
        out.timing["case"] = timing;
        s["passed"] = s["result"]["passed"];
        break;
      }
      case RunMode::sweep: {
        const std::size_t n = cfg.sweep_epsilons.size();
        std::vector<ojson> entries(n), timings(n);
        std::vector<std::optional<Error>> errors(n);
        std::atomic<std::size_t> next{0};
        std::mutex log_mutex;
        auto worker = [&] {
          for (std::size_t i = next++; i < n; i = next++) {
            const double eps = cfg.sweep_epsilons[i];
            {
              std::lock_guard<std::mutex> lock(log_mutex);
              log("sweep entry " + std::to_string(i) + ": epsilon = " + format_double(eps));
            }
            std::optional<std::filesystem::path> sub;
            if (dir) sub = *dir / ("eps_" + std::to_string(i));
            try {
              entries[i] = solve_case(cfg, eps, sub, cfg.oracle.enabled, timings[i]);
            } catch (const Error& e) {
              errors[i] = e;
            }
          }
        };
        const unsigned nw = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(n)));
        std::vector<std::thread> pool;
        for (unsigned k = 1; k < nw; ++k) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();

        ojson list = ojson::array();
        std::vector<double> eps, err, qn;
        bool all = true, any_error = false;
        std::ostringstream table;
        table << "epsilon\tomega0\tomega0_leading\tomega_err\tnorm_X14\tcompatibility\tpde_residual\titerations\tconverged\n";
        for (std::size_t i = 0; i < n; ++i) {
          if (errors[i]) {
            any_error = true;
            all = false;
            ojson e;
            e["epsilon"] = cfg.sweep_epsilons[i];
            e["error"] = error_record(*errors[i]);
            list.push_back(e);
            continue;
          }
          const auto& r = entries[i];
          list.push_back(r);
          all &= r["passed"].get<bool>();
          eps.push_back(r["epsilon"].get<double>());
          err.push_back(std::abs(r["omega_err"].get<double>()));
          qn.push_back(r["norm_X14"].get<double>());
          table << format_double(eps.back()) << '\t' << format_double(r["omega0"].get<double>()) << '\t'
                << format_double(r["omega0_leading"].get<double>()) << '\t'
                << format_double(r["omega_err"].get<double>()) << '\t' << format_double(qn.back()) << '\t'
                << format_double(r["compatibility_residual"].get<double>()) << '\t'
                << format_double(r["pde_residual_max"].get<double>()) << '\t' << r["iterations"].get<int>()
                << '\t' << (r["converged"].get<bool>() ? 1 : 0) << '\n';
          out.timing["eps_" + std::to_string(i)] = timings[i];
        }
        s["entries"] = list;
        ojson slopes;
        const auto se = loglog_slope(eps, err);
        const auto sq = loglog_slope(eps, qn);
        slopes["omega_err_vs_epsilon"] = se ? ojson(*se) : ojson(nullptr);
        slopes["norm_X14_vs_epsilon"] = sq ? ojson(*sq) : ojson(nullptr);
        s["slopes"] = slopes;
        table << "# slope log|omega_err| vs log epsilon: " << (se ? format_double(*se) : "n/a") << '\n';
        table << "# slope log norm_X14 vs log epsilon: " << (sq ? format_double(*sq) : "n/a") << '\n';
        if (dir) detail::write_text(*dir / "sweep.tsv", table.str());
        s["passed"] = all;
        if (any_error) out.exit_code = kExitRunError;
        break;
      }
      case RunMode::identities: {
        log("running identity diagnostics");
        detail::Checks checks;
        s["result"] = identities_report(cfg, checks);
        s["result"]["checks"] = checks.json();
        s["result"]["passed"] = checks.passed();
        s["passed"] = checks.passed();
        break;
      }
    }
  } catch (const Error& e) {
    s["passed"] = false;
    s["error"] = error_record(e);
    out.exit_code = kExitRunError;
  }
  s["config"] = config_to_json(cfg);
  out.timing["wall_seconds"] = detail::seconds_since(t0);
  if (out.exit_code == kExitOk && !s["passed"].get<bool>()) out.exit_code = kExitChecksFailed;

  if (dir) {
    detail::write_text(*dir / "summary.json", detail::dump(s));
    detail::write_text(*dir / "timing.json", detail::dump(out.timing));
    if (s.contains("error")) detail::write_text(*dir / "error.json", detail::dump(ojson{{"error", s["error"]}}));
  }
  return out;
}

}  // namespace pbl
