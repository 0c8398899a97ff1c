#pragma once

// Slip forcing and the nonlinear part of the von Mises equation. Writing
// q = sqrt(omega^2 q_e^2 + Q), the equation d_s Q - q d_psi^2 Q = 0 becomes
//   d_s Q - omega q_e d_psi^2 Q = f(Q; omega),
//   f = (1 - omega q_e / q) d_s Q,
// after substituting d_psi^2 Q = d_s Q / q.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pbl/discretization.hpp"
#include "pbl/error.hpp"
#include "pbl/geometry.hpp"

namespace pbl {

/// Composite slip f = q_e + epsilon g on the geometry's s-grid.
struct SlipForcing {
  double epsilon = 0.0;
  std::vector<double> g;
  std::vector<double> f_slip;
};

inline SlipForcing make_forcing(const BoundaryGeometry& geometry, double epsilon, std::vector<double> g) {
  detail::require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be nonnegative");
  detail::require(g.size() == geometry.size(), "forcing profile length does not match the geometry");
  SlipForcing f{epsilon, std::move(g), std::vector<double>(geometry.size())};
  for (std::size_t i = 0; i < f.g.size(); ++i) {
    detail::require(std::isfinite(f.g[i]), "forcing profile must be finite");
    f.f_slip[i] = geometry.q_e[i] + epsilon * f.g[i];
    if (!(f.f_slip[i] > 0.0))
      throw Error(ErrorKind::slip_vanishes, "composite slip q_e + epsilon g must stay positive", f.f_slip[i]);
  }
  return f;
}

/// Trigonometric forcing g(s) = sum_k a_k cos(2 pi k s / L) + b_k sin(2 pi k s / L),
/// k starting at 1 for both lists.
inline std::vector<double> trig_profile(const BoundaryGeometry& geometry, std::span<const double> cos_coeffs,
                                        std::span<const double> sin_coeffs) {
  std::vector<double> g(geometry.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = 2.0 * std::numbers::pi * geometry.s_grid[i] / geometry.length;
    for (std::size_t k = 0; k < cos_coeffs.size(); ++k) g[i] += cos_coeffs[k] * std::cos(double(k + 1) * x);
    for (std::size_t k = 0; k < sin_coeffs.size(); ++k) g[i] += sin_coeffs[k] * std::sin(double(k + 1) * x);
  }
  return g;
}

namespace detail {

/// q = sqrt(omega^2 q_e^2 + Q) at every node; throws on a stagnant layer.
inline Field speed_field(const Field& Q, double omega, const BoundaryGeometry& geometry) {
  Field q(Q.n_s(), Q.n_psi());
  for (std::size_t i = 0; i < Q.n_s(); ++i) {
    const double a2 = omega * omega * geometry.q_e[i] * geometry.q_e[i];
    for (std::size_t j = 0; j < Q.n_psi(); ++j) {
      const double q2 = a2 + Q(i, j);
      if (!(q2 > 0.0))
        throw Error(ErrorKind::degeneracy,
                    "stagnant layer: omega^2 q_e^2 + Q <= 0 at s index " + std::to_string(i) +
                        ", psi index " + std::to_string(j),
                    q2);
      q(i, j) = std::sqrt(q2);
    }
  }
  return q;
}

}  // namespace detail

/// f(Q, s; omega) = (1 - omega q_e / q) d_s Q, with d_s spectral. The factor is
/// evaluated as Q / (q (q + omega q_e)) to avoid cancellation for small Q.
inline Field nonlinearity_f(const Field& Q, double omega, const BoundaryGeometry& geometry) {
  detail::require(Q.n_s() == geometry.size(), "nonlinearity: field and geometry disagree on N_s");
  const Field q = detail::speed_field(Q, omega, geometry);
  Field out = d_ds(Q, geometry.length);
  for (std::size_t i = 0; i < Q.n_s(); ++i) {
    const double a = omega * geometry.q_e[i];
    for (std::size_t j = 0; j < Q.n_psi(); ++j) out(i, j) *= Q(i, j) / (q(i, j) * (q(i, j) + a));
  }
  return out;
}

/// N(psi) = (1/omega) int_0^L f(Q, s; omega) ds.
inline std::vector<double> big_N(const Field& Q, double omega, const BoundaryGeometry& geometry) {
  auto n = integrate_s_columns(nonlinearity_f(Q, omega, geometry), geometry.length);
  for (double& v : n) v /= omega;
  return n;
}

}  // namespace pbl
