#pragma once

// Vorticity selection and the staggered Picard iteration
//   (omega_{n-1}, Q_{n-1}) -> omega_n -> Q_n,
//   d_s Q_n - omega_{n-1} q_e d_psi^2 Q_n = f(Q_{n-1}; omega_{n-1}),
//   Q_n(s, 0) = f_slip^2 - omega_n^2 q_e^2,
// where omega_n is chosen so that the zero mode of the linear problem is
// solvable:
//   omega_n^2 int q_e^3 = int q_e f_slip^2 + (1/omega_{n-1}) int_0^inf y int_0^L f(Q_{n-1}) ds dy.
//
// Sign note: integrating the equation over s gives d_psi^2 int q_e Q ds = -N,
// hence int q_e Q(., 0) ds = -int y N dy. The explicit part of the update is
//   omega_bar* = -(2 int q_e^2 g + eps int q_e g^2) / int q_e^3,   1 - omega^2 = eps omega_bar,
// which reproduces Wood's formula on the disk.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pbl/discretization.hpp"
#include "pbl/error.hpp"
#include "pbl/geometry.hpp"
#include "pbl/linear_solver.hpp"
#include "pbl/nonlinearity.hpp"
#include "pbl/norms.hpp"

namespace pbl {

struct VorticityState {
  double omega0 = 1.0;
  double omega_bar = 0.0;       ///< (1 - omega0^2) / eps
  double omega_bar_star = 0.0;  ///< part fixed by the slip data alone
  double omega_bar_err = 0.0;   ///< part carried by the nonlinear integral
  double omega_err = 0.0;       ///< omega0^2 - int q_e f^2 / int q_e^3
};

namespace detail {

inline double cube_integral(const BoundaryGeometry& geometry) {
  std::vector<double> q3(geometry.size());
  for (std::size_t i = 0; i < q3.size(); ++i) q3[i] = std::pow(geometry.q_e[i], 3);
  return integrate_s(q3, geometry.length);
}

inline double weighted_square_integral(const BoundaryGeometry& geometry, std::span<const double> f) {
  std::vector<double> v(geometry.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = geometry.q_e[i] * f[i] * f[i];
  return integrate_s(v, geometry.length);
}

}  // namespace detail

/// Closed-form selection on a disk of radius R: omega0^2 = mean(f^2) / (R/2)^2.
inline double wood_disk(std::span<const double> f_slip, double radius) {
  detail::require(radius > 0.0, "disk radius must be positive");
  double m = 0.0;
  for (double v : f_slip) m += v * v;
  m /= static_cast<double>(f_slip.size());
  return std::sqrt(m) / (0.5 * radius);
}

/// Leading-order selection omega0^2 = int q_e f^2 / int q_e^3.
inline double fl_leading(std::span<const double> f_slip, const BoundaryGeometry& geometry) {
  return std::sqrt(detail::weighted_square_integral(geometry, f_slip) / detail::cube_integral(geometry));
}

/// Vorticity update from the previous iterate. `F_prev` may carry a
/// precomputed nonlinearity_f(Q_prev, omega_prev).
inline VorticityState fl_update(const Field& Q_prev, double omega_prev, const SlipForcing& forcing,
                                const BoundaryGeometry& geometry, const Grid& grid,
                                const Field* F_prev = nullptr) {
  const double L = geometry.length;
  const double c3 = detail::cube_integral(geometry);
  const Field F = F_prev ? *F_prev : nonlinearity_f(Q_prev, omega_prev, geometry);
  const double moment = first_moment(integrate_s_columns(F, L), grid.psi_nodes()) / omega_prev;
  const double omega_sq = (detail::weighted_square_integral(geometry, forcing.f_slip) + moment) / c3;
  if (!(omega_sq > 0.0))
    throw Error(ErrorKind::degeneracy, "vorticity update has no real root (omega^2 <= 0)", omega_sq);

  VorticityState st;
  st.omega0 = std::sqrt(omega_sq);
  st.omega_err = moment / c3;
  const double eps = forcing.epsilon;
  if (eps > 0.0) {
    std::vector<double> q2g(geometry.size()), qg2(geometry.size());
    for (std::size_t i = 0; i < q2g.size(); ++i) {
      const double qe = geometry.q_e[i];
      q2g[i] = qe * qe * forcing.g[i];
      qg2[i] = qe * forcing.g[i] * forcing.g[i];
    }
    st.omega_bar_star = -(2.0 * integrate_s(q2g, L) + eps * integrate_s(qg2, L)) / c3;
    st.omega_bar_err = -moment / (eps * c3);
    st.omega_bar = (1.0 - omega_sq) / eps;
  }
  return st;
}

/// Q(s, 0) = f^2 - omega0^2 q_e^2, cross-checked against
/// eps omega_bar q_e^2 + 2 eps g q_e + eps^2 g^2.
inline std::vector<double> boundary_data(const VorticityState& state, const SlipForcing& forcing,
                                         const BoundaryGeometry& geometry) {
  const double eps = forcing.epsilon;
  const double w2 = state.omega0 * state.omega0;
  const double mismatch = std::abs(1.0 - w2 - eps * state.omega_bar);
  if (mismatch > 1e-12)
    throw Error(ErrorKind::invalid_argument, "inconsistent state: 1 - omega0^2 != eps omega_bar", mismatch);
  std::vector<double> b(geometry.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double qe = geometry.q_e[i];
    const double g = forcing.g[i];
    b[i] = forcing.f_slip[i] * forcing.f_slip[i] - w2 * qe * qe;
    const double alt = eps * state.omega_bar * qe * qe + 2.0 * eps * g * qe + eps * eps * g * g;
    if (std::abs(b[i] - alt) > 1e-12)
      throw Error(ErrorKind::invalid_argument, "inconsistent state: boundary data forms disagree",
                  std::abs(b[i] - alt));
  }
  return b;
}

struct TraceRow {
  int n = 0;
  double omega0 = 0.0;
  double q_norm = 0.0;             ///< ||Q_n||_{X_{1,4}}
  double dq_norm = 0.0;            ///< ||Q_n - Q_{n-1}||_{X_{1,4}}
  double d_omega = 0.0;            ///< |omega_n - omega_{n-1}|
  double d_omega_bar = 0.0;        ///< |omega_bar_n - omega_bar_{n-1}|
  double compatibility = 0.0;      ///< compatibility_residual(Q_n, omega_n)
  double pde_residual = 0.0;       ///< max-norm PDE residual of Q_n
  std::optional<double> ratio;     ///< dq_norm_n / dq_norm_{n-1}, n >= 2
};

struct IterationTrace {
  std::vector<TraceRow> rows;
  bool converged = false;
  bool safety_bound_exceeded = false;
  double safety_bound = 0.0;
  std::vector<double> contraction_ratios() const {
    std::vector<double> r;
    for (const auto& row : rows)
      if (row.ratio) r.push_back(*row.ratio);
    return r;
  }
};

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double compatibility_tol = kDefaultCompatibilityTol;
  double safety_factor = 0.05;    ///< bound eps <= safety_factor min(q_e)^2 / max|g|
  bool enforce_safety_bound = false;
};

struct PicardResult {
  VorticityState state;
  Field Q;
  IterationTrace trace;
};

inline double safety_bound(const BoundaryGeometry& geometry, const SlipForcing& forcing, double factor) {
  double gmax = 0.0;
  for (double v : forcing.g) gmax = std::max(gmax, std::abs(v));
  if (gmax == 0.0) return std::numeric_limits<double>::infinity();
  return factor * geometry.min_slip() * geometry.min_slip() / gmax;
}

/// Runs the iteration and returns whatever it reached; trace.converged tells
/// whether the stopping test was met.
inline PicardResult picard_iterate(const BoundaryGeometry& geometry, const SlipForcing& forcing, const Grid& grid,
                                   const PicardOptions& opt = {}) {
  detail::require(opt.tol > 0.0 && opt.max_iter >= 1, "picard: tol must be positive and max_iter >= 1");
  detail::require(geometry.size() == grid.n_s(), "picard: geometry and grid disagree on N_s");
  PicardResult res;
  res.trace.safety_bound = safety_bound(geometry, forcing, opt.safety_factor);
  res.trace.safety_bound_exceeded = forcing.epsilon > res.trace.safety_bound;
  if (res.trace.safety_bound_exceeded && opt.enforce_safety_bound)
    throw Error(ErrorKind::invalid_argument, "epsilon exceeds the small-data safety bound", res.trace.safety_bound);

  const NormSpec x14{1, 4};
  Field Q(grid);
  double omega_prev = 1.0;
  double omega_bar_prev = 0.0;
  Field F = nonlinearity_f(Q, omega_prev, geometry);
  for (int n = 0; n < opt.max_iter; ++n) {
    const VorticityState st = fl_update(Q, omega_prev, forcing, geometry, grid, &F);
    LinearProblem lp{geometry, omega_prev, F, Field(), boundary_data(st, forcing, geometry)};
    Field Qn = solve_linear(lp, grid, opt.compatibility_tol);

    TraceRow row;
    row.n = n;
    row.omega0 = st.omega0;
    row.q_norm = xkm_norm(Qn, grid, geometry.length, x14);
    row.dq_norm = xkm_norm(Qn - Q, grid, geometry.length, x14);
    row.d_omega = std::abs(st.omega0 - omega_prev);
    row.d_omega_bar = std::abs(st.omega_bar - omega_bar_prev);
    F = nonlinearity_f(Qn, st.omega0, geometry);
    row.compatibility = compatibility_residual(Qn, st.omega0, forcing, geometry, grid);
    row.pde_residual = pde_residual(Qn, st.omega0, geometry, grid).max;
    if (n >= 2 && res.trace.rows.back().dq_norm > 0.0) row.ratio = row.dq_norm / res.trace.rows.back().dq_norm;
    res.trace.rows.push_back(row);

    Q = std::move(Qn);
    omega_prev = st.omega0;
    omega_bar_prev = st.omega_bar;
    res.state = st;
    if (row.dq_norm + row.d_omega < opt.tol) {
      res.trace.converged = true;
      break;
    }
  }
  res.Q = std::move(Q);
  return res;
}

inline PicardResult picard_solve(const BoundaryGeometry& geometry, const SlipForcing& forcing, const Grid& grid,
                                 const PicardOptions& opt = {}) {
  auto res = picard_iterate(geometry, forcing, grid, opt);
  if (!res.trace.converged) {
    const auto& last = res.trace.rows.back();
    throw Error(ErrorKind::no_convergence,
                "Picard iteration did not converge in " + std::to_string(opt.max_iter) + " iterations",
                last.dq_norm + last.d_omega);
  }
  return res;
}

}  // namespace pbl
