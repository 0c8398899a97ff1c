#pragma once

// Weighted Sobolev norms X_{k,m} and residual diagnostics.
//
//   ||f||^2_{X_{k,m}} = sum_{k' <= k} sum_{m' <= m} ||<psi>^{m'} d_s^{k'} f||^2 + ||<psi>^{m'} d_s^{k'+1} f||^2
//                                              + ||<psi>^{m'} d_psi d_s^{k'} f||^2 + ||<psi>^{m'} d_psi^2 d_s^{k'} f||^2
//
// with <psi> = 1 + psi, L^2 by the s rectangle rule and psi trapezoid rule.
// For large m the weights reach 1e149 at psi_max = 30, so every norm is
// accumulated as a logarithm.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pbl/discretization.hpp"
#include "pbl/error.hpp"
#include "pbl/geometry.hpp"
#include "pbl/nonlinearity.hpp"

namespace pbl {

struct NormSpec {
  int k = 1;
  int m = 4;
};

struct NormValue {
  double value = 0.0;       ///< the norm; +inf only if it exceeds the double range
  double log_value = -std::numeric_limits<double>::infinity();
  double tail_fraction = 0.0;  ///< share of the squared norm from the outer tenth of the psi range
  bool tail_warning = false;   ///< tail_fraction above 1e-6
};

namespace detail {

// log sum_{m'=0}^{m} r^{m'} for r = (1 + psi)^2 >= 1.
inline double log_weight_sum(double psi, int m) {
  const double lr = 2.0 * std::log1p(psi);
  if (lr == 0.0) return std::log(static_cast<double>(m + 1));
  const double top = static_cast<double>(m + 1) * lr;
  // (r^{m+1} - 1)/(r - 1) in logs.
  return top + std::log1p(-std::exp(-top)) - std::log(std::expm1(lr));
}

class LogAccumulator {
 public:
  void add(double log_term) { terms_.push_back(log_term); }
  double result() const {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms_) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (double t : terms_) acc += std::exp(t - mx);
    return mx + std::log(acc);
  }

 private:
  std::vector<double> terms_;
};

}  // namespace detail

inline NormValue xkm_norm_detail(const Field& Q, const Grid& grid, double length, NormSpec spec) {
  detail::require(spec.k >= 0 && spec.k <= 2, "norm: k must be in 0..2");
  detail::require(spec.m >= 0 && spec.m <= 50, "norm: m must be in 0..50");
  detail::require(Q.n_s() == grid.n_s() && Q.n_psi() == grid.n_psi(), "norm: field does not match grid");
  const auto nodes = grid.psi_nodes();
  const auto w = trapezoid_weights(nodes);
  const double ds = length / static_cast<double>(Q.n_s());
  std::vector<double> log_node(Q.n_psi());
  for (std::size_t j = 0; j < nodes.size(); ++j)
    log_node[j] = std::log(w[j] * ds) + detail::log_weight_sum(nodes[j], spec.m);

  const std::size_t tail_start = static_cast<std::size_t>(0.9 * static_cast<double>(nodes.size() - 1));
  detail::LogAccumulator all, tail;
  auto accumulate = [&](const Field& f) {
    for (std::size_t i = 0; i < f.n_s(); ++i)
      for (std::size_t j = 0; j < f.n_psi(); ++j) {
        const double v = f(i, j);
        if (v == 0.0) continue;
        const double t = 2.0 * std::log(std::abs(v)) + log_node[j];
        all.add(t);
        if (j >= tail_start) tail.add(t);
      }
  };
  Field ds_k = Q;
  for (int kk = 0; kk <= spec.k; ++kk) {
    if (kk > 0) ds_k = d_ds(ds_k, length);
    accumulate(ds_k);
    accumulate(d_ds(ds_k, length));
    accumulate(d_dpsi(ds_k, grid));
    accumulate(d2_dpsi2(ds_k, grid));
  }
  NormValue out;
  const double log_sq = all.result();
  out.log_value = 0.5 * log_sq;
  out.value = std::isfinite(out.log_value) ? std::exp(out.log_value) : 0.0;
  if (std::isfinite(log_sq)) {
    out.tail_fraction = std::exp(tail.result() - log_sq);
    out.tail_warning = out.tail_fraction > 1e-6;
  }
  return out;
}

inline double xkm_norm(const Field& Q, const Grid& grid, double length, NormSpec spec) {
  return xkm_norm_detail(Q, grid, length, spec).value;
}

struct ResidualNorms {
  double max = 0.0;
  double l2 = 0.0;
};

/// Discrete residual d_s Q - q d_psi^2 Q with q = sqrt(omega^2 q_e^2 + Q),
/// over interior psi nodes.
inline ResidualNorms pde_residual(const Field& Q, double omega, const BoundaryGeometry& geometry,
                                  const Grid& grid) {
  const Field q = detail::speed_field(Q, omega, geometry);
  const Field dsQ = d_ds(Q, geometry.length);
  const Field d2Q = d2_dpsi2(Q, grid);
  const auto w = trapezoid_weights(grid.psi_nodes());
  const double ds = geometry.length / static_cast<double>(Q.n_s());
  ResidualNorms r;
  double sq = 0.0;
  for (std::size_t i = 0; i < Q.n_s(); ++i)
    for (std::size_t j = 1; j + 1 < Q.n_psi(); ++j) {
      const double v = dsQ(i, j) - q(i, j) * d2Q(i, j);
      r.max = std::max(r.max, std::abs(v));
      sq += v * v * w[j] * ds;
    }
  r.l2 = std::sqrt(sq);
  return r;
}

/// Signed residual of the selection condition
///   int q_e (f^2 - omega^2 q_e^2) ds + int_0^inf y N(y) dy,
/// with the first moment taken by the same double tail quadrature the linear
/// solver uses.
inline double compatibility_residual(const Field& Q, double omega, const SlipForcing& forcing,
                                     const BoundaryGeometry& geometry, const Grid& grid) {
  std::vector<double> lhs(geometry.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const double qe = geometry.q_e[i];
    lhs[i] = qe * (forcing.f_slip[i] * forcing.f_slip[i] - omega * omega * qe * qe);
  }
  return integrate_s(lhs, geometry.length) + first_moment(big_N(Q, omega, geometry), grid.psi_nodes());
}

/// int q_e Q(., psi) ds + int_psi^inf (y - psi) N(y) dy on every psi node;
/// entry 0 is the compatibility residual once the boundary data is f^2 - omega^2 q_e^2.
inline std::vector<double> pointwise_identity_residual(const Field& Q, double omega,
                                                       const BoundaryGeometry& geometry, const Grid& grid) {
  auto lhs = integrate_s_columns(Q, geometry.length, geometry.q_e);
  const auto rhs = double_tail_integral(big_N(Q, omega, geometry), grid.psi_nodes());
  for (std::size_t j = 0; j < lhs.size(); ++j) lhs[j] += rhs[j];
  return lhs;
}

/// Residual at selected psi values, linearly interpolated between nodes.
inline std::vector<double> pointwise_identity_residual(const Field& Q, double omega,
                                                       const BoundaryGeometry& geometry, const Grid& grid,
                                                       std::span<const double> psi_samples) {
  const auto full = pointwise_identity_residual(Q, omega, geometry, grid);
  const auto nodes = grid.psi_nodes();
  std::vector<double> out;
  for (double p : psi_samples) {
    detail::require(p >= 0.0 && p <= grid.psi_max(), "psi sample outside the grid");
    auto it = std::upper_bound(nodes.begin(), nodes.end(), p);
    std::size_t j = static_cast<std::size_t>(it - nodes.begin());
    if (j >= nodes.size()) {
      out.push_back(full.back());
      continue;
    }
    j = std::max<std::size_t>(j, 1);
    const double t = (p - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
    out.push_back((1 - t) * full[j - 1] + t * full[j]);
  }
  return out;
}

}  // namespace pbl
