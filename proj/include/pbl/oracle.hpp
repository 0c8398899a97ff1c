#pragma once

// Brute-force reference for the selected vorticity: march
//   d_s Q = q d_psi^2 Q,   q = sqrt(omega^2 q_e^2 + Q),
//   Q(s, 0) = f^2 - omega^2 q_e^2,   Q(s, psi_max) = 0,
// in s as an evolution, find the s-periodic solution as a fixed point of the
// period map, and shoot on omega.
//
// On the truncated psi range a periodic solution exists for every omega; what
// a wrong omega leaves behind is a linear far-field profile in
//   P(psi) = int_0^L q_e Q ds,
// i.e. a flux through psi_max. The shooting residual is
//   r(omega) = -psi_max P'(psi_max),
// which equals int q_e b ds + int y N dy for the periodic layer and vanishes
// exactly at the selected omega.
//
// Time stepping: theta scheme with the coefficient frozen at the half step,
// q_e at s_{n+1/2} and Q extrapolated as (3 Q^n - Q^{n-1}) / 2, so every step
// is a single tridiagonal solve.

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbl/discretization.hpp"
#include "pbl/error.hpp"
#include "pbl/fl_iteration.hpp"
#include "pbl/geometry.hpp"
#include "pbl/nonlinearity.hpp"
#include "pbl/spectral.hpp"

namespace pbl {

struct MarchConfig {
  int steps_per_period = 1024;
  double theta = 0.5;
  int poincare_max_iters = 3000;
  double poincare_tol = 1e-13;  ///< max |Q(L) - Q(0)| at the fixed point
  int anderson_depth = 6;       ///< 0 gives plain fixed-point iteration
  double shoot_tol = 1e-11;     ///< bracket width in omega
  std::optional<std::pair<double, double>> shoot_bracket;
  double bracket_eps_factor = 5.0;  ///< default bracket fl_leading +- max(factor eps^2, min_halfwidth)
  double bracket_min_halfwidth = 1e-3;
};

inline void validate(const MarchConfig& c) {
  detail::require(c.steps_per_period >= 64, "march: steps_per_period must be at least 64");
  detail::require(c.theta >= 0.5 && c.theta <= 1.0, "march: theta must lie in [0.5, 1]");
  detail::require(c.poincare_max_iters >= 1, "march: poincare_max_iters must be positive");
  detail::require(c.poincare_tol > 0.0 && c.shoot_tol > 0.0, "march: tolerances must be positive");
  detail::require(c.anderson_depth >= 0 && c.anderson_depth <= 50, "march: anderson_depth must be in 0..50");
}

struct PeriodResult {
  std::vector<double> profile;   ///< Q(L, psi)
  std::vector<double> moment;    ///< P(psi) = int_0^L q_e Q ds over the period
  std::vector<double> mean;      ///< int_0^L Q ds over the period
  Field samples;                 ///< Q at s_i = i L / n_s when requested
};

namespace detail {

/// Boundary data and slip interpolated to arbitrary s.
class MarchData {
 public:
  MarchData(const BoundaryGeometry& geometry, const SlipForcing& forcing, double omega)
      : q_e_(geometry.q_e, geometry.length), f_(forcing.f_slip, geometry.length), omega_(omega) {}
  double q_e(double s) const { return q_e_(s); }
  double b(double s) const {
    const double f = f_(s);
    const double q = q_e_(s);
    return f * f - omega_ * omega_ * q * q;
  }

 private:
  TrigInterpolant q_e_;
  TrigInterpolant f_;
  double omega_;
};

inline void thomas(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                   std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// Advances one period from Q_init (a psi profile at s = 0). With
/// record_field, Q is also stored on the n_s grid points, which requires
/// steps_per_period to be a multiple of n_s.
inline PeriodResult march_period(std::span<const double> Q_init, double omega, const SlipForcing& forcing,
                                 const BoundaryGeometry& geometry, const Grid& grid, const MarchConfig& config,
                                 bool record_field = false) {
  validate(config);
  const std::size_t np = grid.n_psi();
  detail::require(Q_init.size() == np, "march: initial profile does not match the grid");
  detail::require(omega > 0.0, "march: omega must be positive");
  const detail::MarchData data(geometry, forcing, omega);
  const PsiStencil st(grid.psi_nodes());
  const double L = geometry.length;
  const int steps = config.steps_per_period;
  const double ds = L / steps;
  const double th = config.theta;

  std::vector<double> Q(Q_init.begin(), Q_init.end()), Q_old = Q, Q_new(np), d2(np);
  std::vector<double> lo(np), di(np), up(np), rhs(np);
  PeriodResult out{{}, std::vector<double>(np, 0.0), std::vector<double>(np, 0.0), Field()};
  std::size_t stride = 0;
  if (record_field) {
    detail::require(static_cast<std::size_t>(steps) % grid.n_s() == 0,
                    "march: steps_per_period must be a multiple of N_s to record the field");
    stride = static_cast<std::size_t>(steps) / grid.n_s();
    out.samples = Field(grid.n_s(), np);
  }

  for (int n = 0; n < steps; ++n) {
    if (stride > 0 && static_cast<std::size_t>(n) % stride == 0) {
      const std::size_t i = static_cast<std::size_t>(n) / stride;
      for (std::size_t j = 0; j < np; ++j) out.samples(i, j) = Q[j];
    }
    const double s_half = (n + 0.5) * ds;
    const double qe = data.q_e(s_half);
    const double a2 = omega * omega * qe * qe;
    st.d2(Q, d2);
    lo[0] = 0.0; di[0] = 1.0; up[0] = 0.0; rhs[0] = data.b((n + 1) * ds);
    lo[np - 1] = 0.0; di[np - 1] = 1.0; up[np - 1] = 0.0; rhs[np - 1] = 0.0;
    for (std::size_t j = 1; j + 1 < np; ++j) {
      const double q2 = a2 + 1.5 * Q[j] - 0.5 * Q_old[j];
      if (!(q2 > 0.0))
        throw Error(ErrorKind::degeneracy, "stagnant layer during march at step " + std::to_string(n), q2);
      const double c = ds * std::sqrt(q2);
      const auto& row = st.d2_row(j);  // three-point, first index j - 1
      lo[j] = -th * c * row.w[0];
      di[j] = 1.0 - th * c * row.w[1];
      up[j] = -th * c * row.w[2];
      rhs[j] = Q[j] + (1.0 - th) * c * d2[j];
    }
    detail::thomas(lo, di, up, rhs);
    Q_new = rhs;
    for (std::size_t j = 0; j < np; ++j) {
      const double avg = th * Q_new[j] + (1.0 - th) * Q[j];
      out.moment[j] += ds * qe * avg;
      out.mean[j] += ds * avg;
    }
    Q_old.swap(Q);
    Q.swap(Q_new);
  }
  out.profile = std::move(Q);
  return out;
}

struct PoincareResult {
  std::vector<double> profile;  ///< periodic profile at s = 0
  std::vector<double> moment;   ///< P(psi) over the periodic orbit
  double drift = 0.0;           ///< r(omega) = -psi_max P'(psi_max)
  double period_drift = 0.0;    ///< int_0^inf mean_s q_e (Q(L) - Q(0)) dpsi at exit
  double defect = 0.0;          ///< max |Q(L) - Q(0)| at exit
  int periods = 0;
  bool converged = false;
  Field field;                  ///< periodic layer on the n_s grid, when requested
};

/// Fixed point of the period map from the zero profile, with Anderson
/// acceleration of depth config.anderson_depth.
inline PoincareResult poincare_fixed_point(double omega, const SlipForcing& forcing, const BoundaryGeometry& geometry,
                                           const Grid& grid, const MarchConfig& config, bool record_field = false) {
  validate(config);
  const std::size_t np = grid.n_psi();
  using Vec = Eigen::VectorXd;
  const std::size_t depth = static_cast<std::size_t>(config.anderson_depth);

  Vec x = Vec::Zero(static_cast<Eigen::Index>(np));
  std::vector<Vec> dF, dG;
  Vec f_prev, g_prev;
  PoincareResult res;
  PeriodResult last;
  for (int it = 0; it < config.poincare_max_iters; ++it) {
    std::vector<double> xin(x.data(), x.data() + np);
    last = march_period(xin, omega, forcing, geometry, grid, config);
    const Vec g = Eigen::Map<const Vec>(last.profile.data(), static_cast<Eigen::Index>(np));
    const Vec f = g - x;
    res.periods = it + 1;
    res.defect = f.lpNorm<Eigen::Infinity>();
    if (res.defect < config.poincare_tol) {
      res.converged = true;
      break;
    }
    if (depth == 0) {
      x = g;
      continue;
    }
    if (it > 0) {
      dF.push_back(f - f_prev);
      dG.push_back(g - g_prev);
      if (dF.size() > depth) {
        dF.erase(dF.begin());
        dG.erase(dG.begin());
      }
    }
    f_prev = f;
    g_prev = g;
    if (dF.empty()) {
      x = g;
      continue;
    }
    Eigen::MatrixXd A(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(dF.size()));
    for (std::size_t c = 0; c < dF.size(); ++c) A.col(static_cast<Eigen::Index>(c)) = dF[c];
    const Vec gamma = A.colPivHouseholderQr().solve(f);
    Vec next = g;
    for (std::size_t c = 0; c < dG.size(); ++c) next -= gamma[static_cast<Eigen::Index>(c)] * dG[c];
    if (!next.allFinite()) {
      dF.clear();
      dG.clear();
      next = g;
    }
    x = next;
  }

  res.profile.assign(x.data(), x.data() + np);
  if (record_field) last = march_period(res.profile, omega, forcing, geometry, grid, config, true);
  res.moment = last.moment;
  res.field = std::move(last.samples);
  const PsiStencil st(grid.psi_nodes());
  const auto dP = st.d1(res.moment);
  res.drift = -grid.psi_max() * dP.back();
  std::vector<double> diff(np);
  for (std::size_t j = 0; j < np; ++j) diff[j] = last.profile[j] - res.profile[j];
  res.period_drift = geometry.mean_slip() * integrate_psi(diff, grid.psi_nodes());
  return res;
}

struct ShootResult {
  double omega0 = 1.0;
  int evaluations = 0;
  std::vector<std::pair<double, double>> samples;  ///< (omega, r) pairs in evaluation order
  std::pair<double, double> bracket;
  PoincareResult periodic;  ///< at the returned omega, with the field when steps_per_period is a multiple of N_s
};

namespace detail {

inline void check_monotone(std::vector<std::pair<double, double>> samples) {
  std::sort(samples.begin(), samples.end());
  int sign = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double d = samples[i].second - samples[i - 1].second;
    if (d == 0.0) continue;
    const int s = d > 0.0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign)
      throw Error(ErrorKind::non_monotone_response,
                  "oracle drift r(omega) is not monotone between omega = " + std::to_string(samples[i - 1].first) +
                      " and " + std::to_string(samples[i].first),
                  d);
  }
}

}  // namespace detail

/// omega0 with r(omega0) = 0 by bracketed root finding (TOMS 748: secant and
/// inverse-cubic steps safeguarded by bisection).
inline ShootResult shoot_omega(const SlipForcing& forcing, const BoundaryGeometry& geometry, const Grid& grid,
                               const MarchConfig& config) {
  validate(config);
  ShootResult out;
  const bool record = static_cast<std::size_t>(config.steps_per_period) % grid.n_s() == 0;
  const double lead = fl_leading(forcing.f_slip, geometry);
  if (config.shoot_bracket) {
    out.bracket = *config.shoot_bracket;
  } else {
    const double half = std::max(config.bracket_eps_factor * forcing.epsilon * forcing.epsilon, config.bracket_min_halfwidth);
    out.bracket = {lead - half, lead + half};
  }
  detail::require(out.bracket.first > 0.0 && out.bracket.first < out.bracket.second,
                  "oracle: bracket must be an increasing pair of positive values");

  auto drift = [&](double omega) {
    auto p = poincare_fixed_point(omega, forcing, geometry, grid, config);
    if (!p.converged)
      throw Error(ErrorKind::no_convergence,
                  "period map did not reach a fixed point at omega = " + std::to_string(omega), p.defect);
    out.samples.emplace_back(omega, p.drift);
    ++out.evaluations;
    detail::check_monotone(out.samples);
    return p.drift;
  };

  // With no forcing the data vanish at omega = 1 and the layer is Q = 0.
  if (forcing.epsilon == 0.0 && out.bracket.first < 1.0 && 1.0 < out.bracket.second && drift(1.0) == 0.0) {
    out.omega0 = 1.0;
    out.periodic = poincare_fixed_point(1.0, forcing, geometry, grid, config, record);
    return out;
  }

  const double r_lo = drift(out.bracket.first);
  const double r_hi = drift(out.bracket.second);
  if (!(r_lo * r_hi < 0.0))
    throw Error(ErrorKind::no_sign_change,
                "oracle drift has no sign change on [" + std::to_string(out.bracket.first) + ", " +
                    std::to_string(out.bracket.second) + "]: r = " + std::to_string(r_lo) + ", " +
                    std::to_string(r_hi),
                r_lo);
  const double tol = config.shoot_tol;
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  std::uintmax_t max_iter = 100;
  auto root = boost::math::tools::toms748_solve(drift, out.bracket.first, out.bracket.second, r_lo, r_hi, stop,
                                                max_iter);
  // Pick the end of the final bracket with the smaller drift.
  const double a = root.first;
  const double b = root.second;
  double ra = 0.0, rb = 0.0;
  for (const auto& [w, r] : out.samples) {
    if (w == a) ra = r;
    if (w == b) rb = r;
  }
  const double lin = (ra != rb) ? a - ra * (b - a) / (rb - ra) : 0.5 * (a + b);
  out.omega0 = (lin >= a && lin <= b) ? lin : 0.5 * (a + b);
  out.periodic = poincare_fixed_point(out.omega0, forcing, geometry, grid, config, record);
  return out;
}

}  // namespace pbl
