#pragma once

// Boundary data for the slip-driven eddy: arc-length grid, the slip q_e of
// the unit-vorticity Euler flow, and boundary curvature.
//
// Curvature convention: gamma = x1'' x2' - x1' x2'' for the counterclockwise
// arc-length parametrization, so gamma = -1/R on a disk of radius R. With the
// inward normal n = (-tau_2, tau_1) the Frenet relations read
//   n' = gamma tau,   tau' = -gamma n,
// and J(s, z) = 1 + z gamma(s) is the scale factor of s at distance z from the
// wall.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pbl/discretization.hpp"
#include "pbl/error.hpp"
#include "pbl/spectral.hpp"

namespace pbl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Explicit boundary curve for the analytic domains (disk, ellipse
/// x^2/a^2 + y^2 = 1), parametrized counterclockwise by arc length from the
/// point on the positive x-axis. Also carries the unit-vorticity stream
/// function psi_* (Laplacian 1, constant on the boundary).
class BoundaryEmbedding {
 public:
  enum class Shape { disk, ellipse };

  static BoundaryEmbedding disk(double radius) {
    detail::require(radius > 0.0, "disk radius must be positive");
    BoundaryEmbedding e;
    e.shape_ = Shape::disk;
    e.a_ = radius;
    e.b_ = radius;
    e.length_ = 2.0 * std::numbers::pi * radius;
    return e;
  }

  static BoundaryEmbedding ellipse(double a) {
    detail::require(a > 0.0, "ellipse semi-axis ratio must be positive");
    BoundaryEmbedding e;
    e.shape_ = Shape::ellipse;
    e.a_ = a;
    e.b_ = 1.0;
    // ds/dtheta is smooth and 2 pi periodic; its Fourier series converges
    // geometrically, so the running integral is accurate to rounding.
    constexpr std::size_t kSamples = 1024;
    std::vector<double> speed(kSamples);
    for (std::size_t k = 0; k < kSamples; ++k)
      speed[k] = e.theta_speed(2.0 * std::numbers::pi * static_cast<double>(k) / kSamples);
    e.arc_ = TrigInterpolant(speed, 2.0 * std::numbers::pi);
    e.length_ = 2.0 * std::numbers::pi * e.arc_.mean();
    return e;
  }

  Shape shape() const { return shape_; }
  double length() const { return length_; }
  double semi_axis_x() const { return a_; }
  double semi_axis_y() const { return b_; }

  /// Parameter angle theta with X = (a cos theta, b sin theta), for arc length s.
  double theta(double s) const {
    const double turns = std::floor(s / length_);
    const double local = s - turns * length_;
    const double base = 2.0 * std::numbers::pi * turns;
    if (shape_ == Shape::disk) return base + local / a_;
    double lo = 0.0;
    double hi = 2.0 * std::numbers::pi;
    double th = 2.0 * std::numbers::pi * local / length_;
    for (int it = 0; it < 100; ++it) {
      const double r = arc_.integral(th) - local;
      if (std::abs(r) <= 1e-15 * length_) break;
      if (r > 0.0) hi = th; else lo = th;
      double next = th - r / theta_speed(th);
      if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - th) <= 1e-16) { th = next; break; }
      th = next;
    }
    return base + th;
  }

  /// Arc length at parameter angle theta in [0, 2 pi].
  double arc_length(double theta) const {
    if (shape_ == Shape::disk) return a_ * theta;
    return arc_.integral(theta);
  }

  Vec2 point(double s) const {
    const double th = theta(s);
    return {a_ * std::cos(th), b_ * std::sin(th)};
  }
  Vec2 tangent(double s) const {
    const double th = theta(s);
    const double sp = theta_speed(th);
    return {-a_ * std::sin(th) / sp, b_ * std::cos(th) / sp};
  }
  /// Inward unit normal, tangent rotated by +90 degrees.
  Vec2 normal(double s) const {
    const Vec2 t = tangent(s);
    return {-t.y, t.x};
  }
  double curvature(double s) const {
    const double sp = theta_speed(theta(s));
    return -a_ * b_ / (sp * sp * sp);
  }
  double max_abs_curvature() const {
    return std::max(a_ / (b_ * b_), b_ / (a_ * a_));
  }

  /// psi_* with Laplacian 1 and constant boundary value; for the ellipse
  /// psi_* = a^2/(2(1+a^2)) (x^2/a^2 + y^2).
  double stream_function(Vec2 p) const {
    const double a2 = a_ * a_;
    const double b2 = b_ * b_;
    return (b2 * p.x * p.x + a2 * p.y * p.y) / (2.0 * (a2 + b2));
  }
  /// u_* = grad^perp psi_* = (-d_y psi_*, d_x psi_*).
  Vec2 stream_velocity(Vec2 p) const {
    const double a2 = a_ * a_;
    const double b2 = b_ * b_;
    return {-a2 * p.y / (a2 + b2), b2 * p.x / (a2 + b2)};
  }

  /// Position at arc length s and inward distance z.
  Vec2 collar_point(double s, double z) const { return point(s) + z * normal(s); }

 private:
  double theta_speed(double th) const {
    const double sx = a_ * std::sin(th);
    const double cy = b_ * std::cos(th);
    return std::sqrt(sx * sx + cy * cy);
  }

  Shape shape_ = Shape::disk;
  double a_ = 1.0;
  double b_ = 1.0;
  double length_ = 2.0 * std::numbers::pi;
  TrigInterpolant arc_;
};

/// Boundary data on a uniform periodic arc-length grid.
struct BoundaryGeometry {
  double length = 0.0;
  std::vector<double> s_grid;
  std::vector<double> q_e;
  std::optional<std::vector<double>> curvature;
  std::optional<BoundaryEmbedding> embedding;

  std::size_t size() const { return s_grid.size(); }
  double spacing() const { return length / static_cast<double>(s_grid.size()); }
  double min_slip() const { return *std::min_element(q_e.begin(), q_e.end()); }
  double max_slip() const { return *std::max_element(q_e.begin(), q_e.end()); }
  double mean_slip() const { return integrate_s(q_e, length) / length; }
};

namespace detail {

inline void check_sample_count(std::size_t n) {
  require(n >= 8 && n % 2 == 0, "sample count must be even and at least 8");
}

inline std::vector<double> uniform_s_grid(double length, std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>(i) * length / static_cast<double>(n);
  return s;
}

inline BoundaryGeometry sample_embedding(const BoundaryEmbedding& e, std::size_t n) {
  BoundaryGeometry g;
  g.length = e.length();
  g.s_grid = uniform_s_grid(g.length, n);
  g.q_e.resize(n);
  std::vector<double> curv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = g.s_grid[i];
    g.q_e[i] = dot(e.stream_velocity(e.point(s)), e.tangent(s));
    curv[i] = e.curvature(s);
  }
  g.curvature = std::move(curv);
  g.embedding = e;
  return g;
}

}  // namespace detail

inline BoundaryGeometry disk_geometry(double radius, std::size_t n_s) {
  detail::require(radius > 0.0, "disk radius must be positive");
  detail::check_sample_count(n_s);
  return detail::sample_embedding(BoundaryEmbedding::disk(radius), n_s);
}

/// Unit-vorticity slip on the ellipse x^2/a^2 + y^2 = 1, sampled on a uniform
/// arc-length grid. q_e is u_* . tau evaluated at the exact boundary points.
inline BoundaryGeometry ellipse_geometry(double a, std::size_t n_s) {
  detail::require(a > 0.0, "ellipse semi-axis ratio must be positive");
  detail::check_sample_count(n_s);
  return detail::sample_embedding(BoundaryEmbedding::ellipse(a), n_s);
}

inline BoundaryGeometry custom_geometry(double length, std::vector<double> q_e_samples) {
  detail::require(std::isfinite(length) && length > 0.0, "boundary length must be positive");
  detail::check_sample_count(q_e_samples.size());
  for (double v : q_e_samples) {
    detail::require(std::isfinite(v), "slip samples must be finite");
    if (!(v > 0.0)) throw Error(ErrorKind::slip_vanishes, "slip vanishes (sample <= 0)", v);
  }
  BoundaryGeometry g;
  g.length = length;
  g.s_grid = detail::uniform_s_grid(length, q_e_samples.size());
  g.q_e = std::move(q_e_samples);
  return g;
}

/// Tabulated geometry: "L <value>" header, then one q_e sample per line.
inline BoundaryGeometry parse_geometry_table(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<double> length;
  std::vector<double> samples;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (!length) {
      if (tok != "L") throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected header 'L <value>'");
      std::string value;
      if (!(ls >> value)) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": missing length value");
      length = detail::parse_strict_double(value, line_no);
    } else {
      samples.push_back(detail::parse_strict_double(tok, line_no));
    }
    std::string extra;
    if (ls >> extra) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": trailing data '" + extra + "'");
  }
  if (!length) throw Error(ErrorKind::parse, "geometry table: missing 'L <value>' header");
  return custom_geometry(*length, std::move(samples));
}

inline BoundaryGeometry load_geometry_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open geometry table '" + path + "'");
  return parse_geometry_table(in);
}

// ---------------------------------------------------------------------------
// unit-vorticity and curvilinear-identity checks
// ---------------------------------------------------------------------------

struct UnitVorticityReport {
  double laplacian_residual = 0.0;   ///< max |Delta psi_* - 1|
  double normal_velocity = 0.0;      ///< max |u_* . n| on the boundary
  bool passed = false;
  double max() const { return std::max(laplacian_residual, normal_velocity); }
};

/// Centered-difference check that psi_* has unit Laplacian (boundary samples
/// and interior probes) and that u_* = grad^perp psi_* is tangent to the wall.
inline UnitVorticityReport verify_unit_vorticity(double a, double tol, double h = 0.05,
                                                 std::size_t n_boundary = 256) {
  const auto e = BoundaryEmbedding::ellipse(a);
  auto psi = [&](Vec2 p) { return e.stream_function(p); };
  auto laplacian = [&](Vec2 p) {
    const double c = psi(p);
    return (psi({p.x + h, p.y}) + psi({p.x - h, p.y}) + psi({p.x, p.y + h}) +
            psi({p.x, p.y - h}) - 4.0 * c) / (h * h);
  };
  auto velocity = [&](Vec2 p) {
    const double dx = (psi({p.x + h, p.y}) - psi({p.x - h, p.y})) / (2.0 * h);
    const double dy = (psi({p.x, p.y + h}) - psi({p.x, p.y - h})) / (2.0 * h);
    return Vec2{-dy, dx};
  };
  UnitVorticityReport r;
  for (std::size_t k = 0; k < n_boundary; ++k) {
    const double s = e.length() * static_cast<double>(k) / static_cast<double>(n_boundary);
    const Vec2 p = e.point(s);
    r.laplacian_residual = std::max(r.laplacian_residual, std::abs(laplacian(p) - 1.0));
    r.normal_velocity = std::max(r.normal_velocity, std::abs(dot(velocity(p), e.normal(s))));
    for (double frac : {0.25, 0.5, 0.75}) {
      r.laplacian_residual = std::max(r.laplacian_residual, std::abs(laplacian(frac * p) - 1.0));
    }
  }
  r.laplacian_residual = std::max(r.laplacian_residual, std::abs(laplacian({0.0, 0.0}) - 1.0));
  r.passed = r.max() < tol;
  return r;
}

using VectorField = std::function<Vec2(Vec2)>;
using ScalarField = std::function<double(Vec2)>;

/// Max discrepancy between Cartesian and wall-coordinate evaluation of each
/// near-wall vector identity.
struct IdentityResiduals {
  double advection_tangential = 0.0;  ///< (u . grad u) . tau
  double advection_normal = 0.0;      ///< (u . grad u) . n
  double laplacian_tangential = 0.0;  ///< Delta u . tau
  double divergence = 0.0;            ///< div u
  double curl = 0.0;                  ///< grad^perp . u = d1 u2 - d2 u1
  double max() const {
    return std::max({advection_tangential, advection_normal, laplacian_tangential, divergence, curl});
  }
};

namespace detail {

inline double collar_limit(const BoundaryEmbedding& e) { return 0.1 / e.max_abs_curvature(); }

inline std::vector<double> collar_depths(const BoundaryEmbedding& e, double collar) {
  if (collar > collar_limit(e) * (1.0 + 1e-12))
    throw Error(ErrorKind::collar_too_wide,
                "collar width exceeds the tubular-neighbourhood radius 0.1 min(1/|gamma|)", collar);
  detail::require(collar > 0.0, "collar width must be positive");
  return {0.25 * collar, 0.5 * collar, 0.75 * collar, collar};
}

}  // namespace detail

/// Gradient identity tau . grad f = (1/J) d_s f and n . grad f = d_z f;
/// returns the larger of the two discrepancies.
inline double gradient_identity_check(const BoundaryEmbedding& e, const ScalarField& f, double h,
                                      double collar, std::size_t n_probe = 64) {
  const auto depths = detail::collar_depths(e, collar);
  double worst = 0.0;
  for (std::size_t k = 0; k < n_probe; ++k) {
    const double s = e.length() * static_cast<double>(k) / static_cast<double>(n_probe);
    for (double z : depths) {
      const Vec2 p = e.collar_point(s, z);
      const Vec2 grad{(f({p.x + h, p.y}) - f({p.x - h, p.y})) / (2.0 * h),
                      (f({p.x, p.y + h}) - f({p.x, p.y - h})) / (2.0 * h)};
      const double jac = 1.0 + z * e.curvature(s);
      auto fw = [&](double ss, double zz) { return f(e.collar_point(ss, zz)); };
      const double ds = (fw(s + h, z) - fw(s - h, z)) / (2.0 * h);
      const double dz = (fw(s, z + h) - fw(s, z - h)) / (2.0 * h);
      worst = std::max(worst, std::abs(dot(grad, e.tangent(s)) - ds / jac));
      worst = std::max(worst, std::abs(dot(grad, e.normal(s)) - dz));
    }
  }
  return worst;
}

/// Evaluates each identity twice: (i) Cartesian centered differences of u,
/// projected on (tau, n); (ii) the wall-coordinate formula in (s, z) with
/// centered differences of u_tau = u . tau(s), u_n = u . n(s). Both use step h,
/// so the discrepancy is O(h^2) when the formula is right and O(1) otherwise.
///
///   (u.grad u).tau = (u_tau/J) d_s u_tau + u_n d_z u_tau + (gamma/J) u_tau u_n
///   (u.grad u).n   = (u_tau/J) d_s u_n   + u_n d_z u_n   - (gamma/J) u_tau^2
///   div u          = (1/J)(d_s u_tau + gamma u_n) + d_z u_n
///   curl u         = (1/J) d_s u_n - d_z u_tau - (gamma/J) u_tau
///   Delta u . tau  = (1/J) d_z(J d_z u_tau) + (1/J) d_s((1/J) d_s u_tau)
///                    + (1/J) d_s(gamma u_n / J) - (gamma^2/J^2) u_tau
///                    + (gamma/J^2) d_s u_n
inline IdentityResiduals curvilinear_identity_check(const BoundaryEmbedding& e, const VectorField& u,
                                                    double h, double collar, std::size_t n_probe = 64) {
  const auto depths = detail::collar_depths(e, collar);

  // Cartesian side.
  auto dx = [&](Vec2 p) { return 1.0 / (2.0 * h) * (u({p.x + h, p.y}) - u({p.x - h, p.y})); };
  auto dy = [&](Vec2 p) { return 1.0 / (2.0 * h) * (u({p.x, p.y + h}) - u({p.x, p.y - h})); };
  auto lap = [&](Vec2 p) {
    return 1.0 / (h * h) *
           (u({p.x + h, p.y}) + u({p.x - h, p.y}) + u({p.x, p.y + h}) + u({p.x, p.y - h}) - 4.0 * u(p));
  };

  // Wall-coordinate side.
  auto u_tau = [&](double s, double z) { return dot(u(e.collar_point(s, z)), e.tangent(s)); };
  auto u_n = [&](double s, double z) { return dot(u(e.collar_point(s, z)), e.normal(s)); };
  auto gam = [&](double s) { return e.curvature(s); };
  auto jac = [&](double s, double z) { return 1.0 + z * gam(s); };
  using Fn = std::function<double(double, double)>;
  auto d_s = [h](const Fn& f, double s, double z) { return (f(s + h, z) - f(s - h, z)) / (2.0 * h); };
  auto d_z = [h](const Fn& f, double s, double z) { return (f(s, z + h) - f(s, z - h)) / (2.0 * h); };

  const Fn ut = u_tau;
  const Fn un = u_n;
  const Fn ds_ut_over_j = [&](double s, double z) { return d_s(ut, s, z) / jac(s, z); };
  const Fn j_dz_ut = [&](double s, double z) { return jac(s, z) * d_z(ut, s, z); };
  const Fn gam_un_over_j = [&](double s, double z) { return gam(s) * u_n(s, z) / jac(s, z); };

  IdentityResiduals r;
  for (std::size_t k = 0; k < n_probe; ++k) {
    const double s = e.length() * static_cast<double>(k) / static_cast<double>(n_probe);
    const Vec2 tau = e.tangent(s);
    const Vec2 nrm = e.normal(s);
    for (double z : depths) {
      const Vec2 p = e.collar_point(s, z);
      const Vec2 v = u(p);
      const Vec2 ux = dx(p);
      const Vec2 uy = dy(p);
      const Vec2 adv = v.x * ux + v.y * uy;
      const double div_c = ux.x + uy.y;
      const double curl_c = ux.y - uy.x;
      const double lap_tau_c = dot(lap(p), tau);

      const double J = jac(s, z);
      const double g = gam(s);
      const double a_t = u_tau(s, z);
      const double a_n = u_n(s, z);
      const double ds_t = d_s(ut, s, z);
      const double dz_t = d_z(ut, s, z);
      const double ds_n = d_s(un, s, z);
      const double dz_n = d_z(un, s, z);

      const double adv_t = a_t / J * ds_t + a_n * dz_t + g / J * a_t * a_n;
      const double adv_n = a_t / J * ds_n + a_n * dz_n - g / J * a_t * a_t;
      const double div_w = (ds_t + g * a_n) / J + dz_n;
      const double curl_w = ds_n / J - dz_t - g / J * a_t;
      const double lap_t = d_z(j_dz_ut, s, z) / J + d_s(ds_ut_over_j, s, z) / J +
                           d_s(gam_un_over_j, s, z) / J - g * g / (J * J) * a_t + g / (J * J) * ds_n;

      r.advection_tangential = std::max(r.advection_tangential, std::abs(dot(adv, tau) - adv_t));
      r.advection_normal = std::max(r.advection_normal, std::abs(dot(adv, nrm) - adv_n));
      r.divergence = std::max(r.divergence, std::abs(div_c - div_w));
      r.curl = std::max(r.curl, std::abs(curl_c - curl_w));
      r.laplacian_tangential = std::max(r.laplacian_tangential, std::abs(lap_tau_c - lap_t));
    }
  }
  return r;
}

}  // namespace pbl
