// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "pbl/run.hpp"

using namespace pbl;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::vector<std::string>& details) {
  std::printf("%s %2d %s\n", pass ? "PASS" : "FAIL", id, title.c_str());
  for (const auto& d : details) std::printf("        %s\n", d.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SlipForcing cos_forcing(const BoundaryGeometry& geo, double eps) {
  const std::vector<double> c{1.0}, sn;
  return make_forcing(geo, eps, trig_profile(geo, c, sn));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  double eps;
  PicardResult result;
  double seconds;
};

}  // namespace

int main() {
  const auto grid = Grid::uniform(128, 301, 30.0);
  const auto disk = disk_geometry(1.0, 128);
  const auto ellipse = ellipse_geometry(2.0, 128);
  const PicardOptions opt;  // tol 1e-10, max_iter 50
  std::vector<const Run*> converged_runs;

  // Disk runs feed criteria 1, 2, 5, 10.
  std::vector<Run> disk_runs;
  for (double eps : {0.01, 0.05, 0.1}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = picard_iterate(disk, cos_forcing(disk, eps), grid, opt);
    disk_runs.push_back({eps, std::move(r), seconds_since(t0)});
  }
  {
    bool omega_ok = true, iter_ok = true, time_ok = true;
    std::vector<std::string> d;
    for (const auto& run : disk_runs) {
      const double wood = std::sqrt(1 + 2 * run.eps * run.eps);
      const double err = std::abs(run.result.state.omega0 - wood);
      const auto n = run.result.trace.rows.size();
      std::size_t omega_settled = n;
      for (std::size_t k = 0; k < n; ++k)
        if (std::abs(run.result.trace.rows[k].omega0 - wood) < 1e-8) {
          omega_settled = k + 1;
          break;
        }
      omega_ok &= run.result.trace.converged && err < 1e-8;
      iter_ok &= run.result.trace.converged && n <= 3;
      time_ok &= run.seconds < 5.0;
      d.push_back(fmt("eps=%-5g |omega0 - sqrt(1+2eps^2)| = %.2e, iterations to tol 1e-10: %zu "
                      "(omega within 1e-8 from iterate %zu), %.2f s",
                      run.eps, err, n, omega_settled, run.seconds));
    }
    d.push_back(fmt("omega0 within 1e-8: %s; runtime < 5 s: %s; converged in <= 3 iterations: %s",
                    omega_ok ? "yes" : "no", time_ok ? "yes" : "no", iter_ok ? "yes" : "no"));
    if (!iter_ok)
      d.push_back("the selected omega0 is exact from the first iterate, but Q keeps changing: f(Q) is a "
                  "nonzero total s-derivative on the disk, so only its s-integral vanishes and the Q "
                  "iterates contract at a finite rate");
    report(1, "Wood/disk exactness (omega0, iteration count, runtime)", omega_ok && iter_ok && time_ok, d);
  }
  {
    bool ok = true;
    std::vector<std::string> d;
    for (const auto& run : disk_runs) {
      double m = 0.0;
      for (double v : big_N(run.result.Q, run.result.state.omega0, disk)) m = std::max(m, std::abs(v));
      ok &= m < 1e-11;
      d.push_back(fmt("eps=%-5g max_psi |N(psi)| = %.2e", run.eps, m));
    }
    report(2, "Disk degeneracy of the nonlinearity (max |N| < 1e-11)", ok, d);
  }

  // Ellipse sweep feeds criteria 3, 4, 5, 7.
  const std::vector<double> sweep{1e-2, 5e-3, 2.5e-3};
  std::vector<Run> ell_runs;
  const auto ts = std::chrono::steady_clock::now();
  for (double eps : sweep) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = picard_iterate(ellipse, cos_forcing(ellipse, eps), grid, opt);
    ell_runs.push_back({eps, std::move(r), seconds_since(t0)});
  }
  const double sweep_seconds = seconds_since(ts);
  {
    std::vector<double> err;
    std::vector<std::string> d;
    bool conv = true;
    for (const auto& run : ell_runs) {
      err.push_back(std::abs(run.result.state.omega_err));
      conv &= run.result.trace.converged;
      d.push_back(fmt("eps=%-7g omega0=%.15f leading=%.15f |omega_err|=%.4e", run.eps, run.result.state.omega0,
                      fl_leading(cos_forcing(ellipse, run.eps).f_slip, ellipse), err.back()));
    }
    const double slope = *loglog_slope(sweep, err);
    const bool ok = conv && std::abs(slope - 2.0) <= 0.3 && sweep_seconds < 120.0;
    d.push_back(fmt("slope = %.4f (target 2.0 +- 0.3), C = |omega_err|/eps^2 = %.4f, sweep time %.2f s", slope,
                    err[0] / (sweep[0] * sweep[0]), sweep_seconds));
    report(3, "FL leading-order accuracy (|omega_err| ~ eps^2)", ok, d);
  }
  {
    std::vector<double> qn;
    std::vector<std::string> d;
    for (const auto& run : ell_runs) {
      const auto x14 = xkm_norm_detail(run.result.Q, grid, ellipse.length, {1, 4});
      const auto x250 = xkm_norm_detail(run.result.Q, grid, ellipse.length, {2, 50});
      qn.push_back(x14.value);
      d.push_back(fmt("eps=%-7g ||Q||_X14 = %.6e, log ||Q||_X250 = %.4f (outer-tenth share %.2e)", run.eps,
                      x14.value, x250.log_value, x250.tail_fraction));
    }
    const double slope = *loglog_slope(sweep, qn);
    d.push_back(fmt("slope = %.4f (target 1.0 +- 0.1)", slope));
    report(4, "Solution smallness (||Q||_X14 ~ eps)", std::abs(slope - 1.0) <= 0.1, d);
  }

  for (const auto& r : disk_runs)
    if (r.result.trace.converged) converged_runs.push_back(&r);
  for (const auto& r : ell_runs)
    if (r.result.trace.converged) converged_runs.push_back(&r);
  {
    bool ok = !converged_runs.empty();
    double worst_c = 0.0, worst_p = 0.0;
    const auto& psis = identity_psi_samples();
    for (const Run* run : converged_runs) {
      const bool is_disk = run >= disk_runs.data() && run < disk_runs.data() + disk_runs.size();
      const auto& geo = is_disk ? disk : ellipse;
      const auto forcing = cos_forcing(geo, run->eps);
      const double w = run->result.state.omega0;
      worst_c = std::max(worst_c, std::abs(compatibility_residual(run->result.Q, w, forcing, geo, grid)));
      for (double v : pointwise_identity_residual(run->result.Q, w, geo, grid, psis))
        worst_p = std::max(worst_p, std::abs(v));
    }
    ok &= worst_c < 1e-8 && worst_p < 1e-7;
    report(5, "Compatibility at convergence", ok,
           {fmt("%zu converged runs; max |compatibility residual| = %.2e (< 1e-8)", converged_runs.size(), worst_c),
            fmt("max |pointwise identity| at psi in {0, 0.5, 1, 2, 5} = %.2e (< 1e-7)", worst_p)});
  }

  {
    const auto t0 = std::chrono::steady_clock::now();
    const MarchConfig mc;
    std::vector<std::string> d;
    bool ok = true;
    try {
      const double eps_d = 0.05;
      const auto fd = cos_forcing(disk, eps_d);
      const auto pd = picard_solve(disk, fd, grid);
      const auto od = shoot_omega(fd, disk, grid, mc);
      const double wood = std::sqrt(1 + 2 * eps_d * eps_d);
      ok &= std::abs(od.omega0 - wood) < 1e-6 && std::abs(od.omega0 - pd.state.omega0) < 1e-6;
      d.push_back(fmt("disk eps=0.05: oracle %.12f, closed form %.12f, picard %.12f, |oracle - closed form| = %.2e",
                      od.omega0, wood, pd.state.omega0, std::abs(od.omega0 - wood)));
      const auto fe = cos_forcing(ellipse, 1e-2);
      const auto& pe = ell_runs[0].result;
      const auto oe = shoot_omega(fe, ellipse, grid, mc);
      ok &= std::abs(oe.omega0 - pe.state.omega0) < 1e-6;
      d.push_back(fmt("ellipse eps=1e-2: oracle %.12f, picard %.12f, |difference| = %.2e (%d drift evaluations)",
                      oe.omega0, pe.state.omega0, std::abs(oe.omega0 - pe.state.omega0), oe.evaluations));
    } catch (const Error& e) {
      ok = false;
      d.push_back(std::string("error: ") + e.what());
    }
    const double secs = seconds_since(t0);
    ok &= secs < 300.0;
    d.push_back(fmt("grid N_s=128, N_psi=301, psi_max=30, %d steps per period; %.2f s", mc.steps_per_period, secs));
    report(6, "Oracle equivalence (|omega_picard - omega_oracle| < 1e-6)", ok, d);
  }

  {
    bool ok = true;
    std::vector<double> worst;
    std::vector<std::string> d;
    for (const auto& run : ell_runs) {
      const auto ratios = run.result.trace.contraction_ratios();
      double m = 0.0;
      std::string list;
      for (double r : ratios) {
        m = std::max(m, r);
        list += fmt(" %.3f", r);
      }
      worst.push_back(m);
      ok &= m <= 0.5;
      d.push_back(fmt("eps=%-7g ratios (n>=2):%s; max %.3f", run.eps, list.c_str(), m));
    }
    for (std::size_t i = 1; i < worst.size(); ++i) ok &= worst[i] < worst[i - 1];
    d.push_back("max ratio decreases with eps: " + std::string(worst[1] < worst[0] && worst[2] < worst[1] ? "yes" : "no"));
    report(7, "Empirical contraction (ratios <= 0.5, decreasing with eps)", ok, d);
  }

  // Criteria 8 and 9 through the identities mode of the run driver.
  ojson ident[2];
  {
    const char* cfgs[2] = {R"({"mode": "identities", "geometry": {"kind": "disk"}})",
                           R"({"mode": "identities", "geometry": {"kind": "ellipse", "a": 2}})"};
    for (int i = 0; i < 2; ++i) {
      RunOptions o;
      o.write_files = false;
      ident[i] = run(parse_config(cfgs[i]), o).summary;
    }
  }
  auto check_value = [](const ojson& summary, const std::string& name, bool& passed) {
    for (const auto& c : summary["result"]["checks"])
      if (c["name"].get<std::string>() == name) {
        passed = c["passed"].get<bool>();
        return c["value"].is_null() ? std::nan("") : c["value"].get<double>();
      }
    passed = false;
    return std::nan("");
  };
  {
    bool ok = true;
    std::vector<std::string> d;
    const char* names[2] = {"disk", "ellipse a=2"};
    for (int i = 0; i < 2; ++i) {
      if (ident[i].contains("error")) {
        ok = false;
        d.push_back(std::string(names[i]) + ": " + ident[i]["error"]["message"].get<std::string>());
        continue;
      }
      bool p1, p2, p3;
      const double o1 = check_value(ident[i], "manufactured_order_1", p1);
      const double o2 = check_value(ident[i], "manufactured_order_2", p2);
      const double ke = ident[i]["result"]["kernel_mode_error"].get<double>();
      check_value(ident[i], "kernel_mode", p3);
      ok &= p1 && p2 && p3;
      d.push_back(fmt("%s: manufactured orders %.3f, %.3f (N_psi 151/301/601); pure-data modes max error %.2e",
                      names[i], o1, o2, ke));
    }
    // The bare kernel: V(0) = 1, H = 0 gives |V| = e^{-sqrt(xi/2) psi}.
    double kerr = 0.0;
    for (double xi : {0.5, 2.0, 10.0}) {
      const std::vector<cplx> H(grid.n_psi(), 0.0);
      const auto V = solve_mode(xi, 1.0, H, grid.psi_nodes());
      for (std::size_t j = 0; j < grid.n_psi(); ++j)
        kerr = std::max(kerr, std::abs(std::abs(V[j]) - std::exp(-std::sqrt(xi / 2) * grid.psi_nodes()[j])));
    }
    ok &= kerr < 1e-10;
    d.push_back(fmt("single-mode kernel | |V| - e^{-sqrt(xi/2) psi} | max = %.2e", kerr));
    report(8, "Linear-solver verification", ok, d);
  }
  {
    bool ok = true;
    std::vector<std::string> d;
    const char* names[2] = {"disk", "ellipse a=2"};
    for (int i = 0; i < 2; ++i) {
      if (ident[i].contains("error")) {
        ok = false;
        continue;
      }
      std::string orders;
      for (const char* id : {"advection_tangential", "advection_normal", "laplacian_tangential", "divergence", "curl"}) {
        bool p;
        const double o = check_value(ident[i], std::string("identity_order_") + id, p);
        ok &= p;
        orders += fmt(" %s=%.3f", id, o);
      }
      bool pu;
      const double uv = check_value(ident[i], "unit_vorticity", pu);
      ok &= pu;
      d.push_back(fmt("%s orders:%s", names[i], orders.c_str()));
      d.push_back(fmt("%s unit-vorticity residual %.2e", names[i], uv));
    }
    report(9, "Curvilinear identities and unit vorticity", ok, d);
  }

  {
    bool ok = true;
    std::vector<std::string> d;
    for (int shape = 0; shape < 2; ++shape) {
      const auto& geo = shape ? ellipse : disk;
      const auto r = picard_iterate(geo, cos_forcing(geo, 0.0), grid, opt);
      const bool z = r.trace.converged && r.state.omega0 == 1.0 && r.Q.max_abs() == 0.0;
      ok &= z;
      d.push_back(fmt("%s eps=0: omega0 = %.17g, max|Q| = %.2e, iterations %zu", shape ? "ellipse" : "disk",
                      r.state.omega0, r.Q.max_abs(), r.trace.rows.size()));
    }
    double wmin = INFINITY;
    for (const Run* run : converged_runs) wmin = std::min(wmin, run->result.state.omega0);
    ok &= wmin > 0.0;
    d.push_back(fmt("min omega0 over %zu converged runs = %.6f", converged_runs.size(), wmin));
    report(10, "Sign and trivial cases", ok, d);
  }

  {
    const auto root = fs::temp_directory_path() / "pbl_acceptance_determinism";
    fs::remove_all(root);
    const auto cfg = parse_config(R"({"mode": "sweep", "geometry": {"kind": "ellipse", "a": 2},
                                      "sweep": {"epsilons": [0.01, 0.005]}})");
    RunOptions a, b;
    a.output_dir = (root / "a").string();
    b.output_dir = (root / "b").string();
    b.workers = 2;
    run(cfg, a);
    run(cfg, b);
    bool ok = true;
    std::size_t bytes = 0;
    for (const char* f : {"summary.json", "sweep.tsv", "eps_0/field.txt", "eps_0/trace.tsv", "eps_1/field.txt",
                          "eps_1/heatmap.tsv"}) {
      const auto x = slurp(root / "a" / f);
      ok &= !x.empty() && x == slurp(root / "b" / f);
      bytes += x.size();
    }
    report(11, "Determinism (bit-identical summaries and dumps)", ok,
           {fmt("two sweep runs (1 and 2 workers), 6 files, %zu bytes compared", bytes)});
  }

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
