#pragma once

// Linear periodic problem
//   d_s Q - omega q_e d_psi^2 Q = F + d_psi^2 G,   Q(s, 0) = b(s),   Q(s, inf) = 0.
//
// With t = J(s) = int_0^s omega q_e the operator becomes d_t - d_psi^2 with
// source H = (F + d_psi^2 G)/(omega q_e). Nonzero t-modes are solved with the
// half-line Dirichlet Green's function; the s-mean is rebuilt from the
// s-integrated equation by two tail integrations, which is also where the
// solvability (compatibility) condition shows up.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "pbl/discretization.hpp"
#include "pbl/error.hpp"
#include "pbl/geometry.hpp"
#include "pbl/spectral.hpp"

namespace pbl {

inline constexpr double kDefaultCompatibilityTol = 1e-8;
inline constexpr double kSourceDecayTol = 1e-8;
// b(s(t)) is not band-limited in t even when b is in s; the t side is
// oversampled so that the return trip t -> s keeps boundary data to ~1e-13.
inline constexpr std::size_t kTOversampling = 4;

struct TMap {
  std::vector<double> J_samples;  ///< J(s_i)
  double L_t = 0.0;
  double mean_speed = 0.0;
  MonotoneMap map;
};

inline TMap build_t_map(const BoundaryGeometry& geometry, double omega) {
  std::vector<double> speed(geometry.size());
  for (std::size_t i = 0; i < speed.size(); ++i) {
    speed[i] = omega * geometry.q_e[i];
    if (!(speed[i] > 0.0))
      throw Error(ErrorKind::parabolicity, "parabolicity violated: omega * q_e must be positive", speed[i]);
  }
  MonotoneMap map(speed, geometry.length);
  TMap t{map.forward_samples(geometry.size()), map.period_t(), map.mean_speed(), map};
  return t;
}

struct LinearProblem {
  BoundaryGeometry geometry;
  double omega = 1.0;
  Field F;
  Field G;  ///< enters as d_psi^2 G; an empty field means G = 0
  std::vector<double> b;
};

/// Solves i xi V - V'' = H on the psi nodes with V(0) = b_hat, V(inf) = 0:
///   V = e^{-mu psi} b_hat + (1/(2 mu)) int (e^{-mu|psi-psi'|} - e^{-mu(psi+psi')}) H dpsi',
/// mu = sqrt(i xi) with positive real part, trapezoid rule in psi'.
inline std::vector<cplx> solve_mode(double xi, cplx b_hat, std::span<const cplx> H_hat,
                                    std::span<const double> nodes) {
  detail::require(xi != 0.0, "solve_mode: zero wavenumber belongs to solve_zero_mode");
  detail::require(H_hat.size() == nodes.size(), "solve_mode: profile length mismatch");
  const std::size_t n = nodes.size();
  const cplx mu = std::sqrt(cplx(0.0, xi));
  const auto w = trapezoid_weights(nodes);

  // A_j = sum_{j' <= j} w e^{-mu(psi_j - psi_j')} H_j',  B_j = sum_{j' > j} w e^{-mu(psi_j' - psi_j)} H_j'.
  std::vector<cplx> A(n), B(n, 0.0), decay(n);
  for (std::size_t j = 1; j < n; ++j) decay[j] = std::exp(-mu * (nodes[j] - nodes[j - 1]));
  A[0] = w[0] * H_hat[0];
  for (std::size_t j = 1; j < n; ++j) A[j] = decay[j] * A[j - 1] + w[j] * H_hat[j];
  for (std::size_t j = n - 1; j-- > 0;) B[j] = decay[j + 1] * (B[j + 1] + w[j + 1] * H_hat[j + 1]);
  cplx C = 0.0;
  for (std::size_t j = 0; j < n; ++j) C += w[j] * std::exp(-mu * nodes[j]) * H_hat[j];

  std::vector<cplx> V(n);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx e = std::exp(-mu * nodes[j]);
    V[j] = e * b_hat + (A[j] + B[j] - e * C) / (2.0 * mu);
  }
  V[0] = b_hat;
  return V;
}

/// Scaled compatibility residual of the linear problem:
///   [int q_e b + (1/omega)(FM(int F ds) + int G(s, 0) ds)] / int q_e^3,
/// FM being the discrete first moment (double tail integral at 0).
inline double linear_compatibility_residual(const Field& F, const Field& G, std::span<const double> b,
                                            const BoundaryGeometry& geometry, double omega,
                                            const Grid& grid) {
  const double L = geometry.length;
  std::vector<double> qb(b.size()), q3(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    qb[i] = geometry.q_e[i] * b[i];
    q3[i] = std::pow(geometry.q_e[i], 3);
  }
  double rhs = first_moment(integrate_s_columns(F, L), grid.psi_nodes());
  if (G.n_s() > 0) rhs += integrate_s(G.column(0), L);
  return (integrate_s(qb, L) + rhs / omega) / integrate_s(q3, L);
}

/// s-mean of Q from the s-integrated equation
///   -omega d_psi^2 int q_e Q ds = int F ds + d_psi^2 int G ds,
/// integrated twice from psi_max:
///   Q0 = [-(1/omega)(D[int F] + int G) - int q_e' Q' ds] / (L <q_e>),
/// with q_e', Q' the oscillatory parts. Throws if the compatibility condition
/// fails, since then no decaying solution exists.
inline std::vector<double> solve_zero_mode(const Field& F, const Field& G, std::span<const double> b,
                                           const BoundaryGeometry& geometry, double omega,
                                           const Field& Q_nonzero, const Grid& grid,
                                           double compatibility_tol = kDefaultCompatibilityTol) {
  const double res = linear_compatibility_residual(F, G, b, geometry, omega, grid);
  if (!(std::abs(res) <= compatibility_tol))
    throw Error(ErrorKind::compatibility, "Feynman-Lagerstrom compatibility violated", res);

  const double L = geometry.length;
  const double qbar = geometry.mean_slip();
  std::vector<double> q_osc(geometry.size());
  for (std::size_t i = 0; i < q_osc.size(); ++i) q_osc[i] = geometry.q_e[i] - qbar;

  auto Q0 = double_tail_integral(integrate_s_columns(F, L), grid.psi_nodes());
  if (G.n_s() > 0) {
    const auto g_int = integrate_s_columns(G, L);
    for (std::size_t j = 0; j < Q0.size(); ++j) Q0[j] += g_int[j];
  }
  const auto coupling = integrate_s_columns(Q_nonzero, L, q_osc);
  for (std::size_t j = 0; j < Q0.size(); ++j) Q0[j] = (-Q0[j] / omega - coupling[j]) / (L * qbar);
  return Q0;
}

inline Field solve_linear(const LinearProblem& p, const Grid& grid,
                          double compatibility_tol = kDefaultCompatibilityTol) {
  const auto& geo = p.geometry;
  const std::size_t ns = grid.n_s();
  const std::size_t np = grid.n_psi();
  detail::require(geo.size() == ns, "solve_linear: geometry and grid disagree on N_s");
  detail::require(p.F.n_s() == ns && p.F.n_psi() == np, "solve_linear: F has wrong shape");
  detail::require(p.b.size() == ns, "solve_linear: boundary data has wrong length");
  const bool has_G = p.G.n_s() > 0;
  if (has_G) detail::require(p.G.same_shape(p.F), "solve_linear: G has wrong shape");
  for (std::size_t i = 0; i < ns; ++i) {
    detail::require(std::abs(p.F(i, np - 1)) <= kSourceDecayTol, "solve_linear: F does not decay at psi_max");
    if (has_G) detail::require(std::abs(p.G(i, np - 1)) <= kSourceDecayTol, "solve_linear: G does not decay at psi_max");
  }

  const TMap tm = build_t_map(geo, p.omega);

  // H = (F + d_psi^2 G) / (omega q_e), on the s grid.
  Field H = p.F;
  if (has_G) H += d2_dpsi2(p.G, grid);
  for (std::size_t i = 0; i < ns; ++i) {
    const double inv = 1.0 / (p.omega * geo.q_e[i]);
    for (double& v : H.row(i)) v *= inv;
  }

  const std::size_t nt = kTOversampling * ns;
  const MapResampler rs(tm.map, ns, nt);
  const Field Ht = rs.s_to_t(H);
  const auto bt = rs.s_to_t(p.b);

  // Half spectra in t for every psi column: spec[j][k].
  std::vector<std::vector<cplx>> spec(np);
  for (std::size_t j = 0; j < np; ++j) spec[j] = rfft(Ht.column(j));
  const auto b_hat = rfft(bt);

  const std::size_t nk = nt / 2 + 1;
  std::vector<std::vector<cplx>> V(np, std::vector<cplx>(nk, 0.0));
  std::vector<cplx> Hk(np);
  for (std::size_t k = 1; k < nk; ++k) {
    const double xi = 2.0 * std::numbers::pi * static_cast<double>(k) / tm.L_t;
    for (std::size_t j = 0; j < np; ++j) Hk[j] = spec[j][k];
    const auto Vk = solve_mode(xi, b_hat[k], Hk, grid.psi_nodes());
    for (std::size_t j = 0; j < np; ++j) V[j][k] = Vk[j];
  }

  Field Vt(nt, np);
  for (std::size_t j = 0; j < np; ++j) Vt.set_column(j, irfft(V[j], nt));
  Field Q = rs.t_to_s(Vt);
  for (std::size_t j = 0; j < np; ++j) {
    auto c = Q.column(j);
    double m = 0.0;
    for (double v : c) m += v;
    m /= static_cast<double>(ns);
    for (double& v : c) v -= m;
    Q.set_column(j, c);
  }

  const auto Q0 = solve_zero_mode(p.F, p.G, p.b, geo, p.omega, Q, grid, compatibility_tol);
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < np; ++j) Q(i, j) += Q0[j];
  return Q;
}

}  // namespace pbl
