#pragma once

// Tensor grid in (s, psi), dense fields on it, psi-direction finite
// differences and quadrature, and the monotone change of periodic variable
// used to straighten the variable-speed heat operator.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pbl/error.hpp"
#include "pbl/spectral.hpp"

namespace pbl {

inline constexpr double kMinPsiMax = 20.0;

/// Tensor grid: N_s periodic samples in s, and psi nodes on [0, psi_max].
class Grid {
 public:
  Grid() = default;

  static Grid uniform(std::size_t n_s, std::size_t n_psi, double psi_max) {
    detail::require(n_psi >= 5, "grid: N_psi must be at least 5");
    std::vector<double> nodes(n_psi);
    const double h = psi_max / static_cast<double>(n_psi - 1);
    for (std::size_t j = 0; j < n_psi; ++j) nodes[j] = h * static_cast<double>(j);
    nodes.back() = psi_max;
    return from_nodes(n_s, std::move(nodes));
  }

  static Grid from_nodes(std::size_t n_s, std::vector<double> nodes) {
    detail::require(n_s >= 8 && n_s % 2 == 0, "grid: N_s must be even and at least 8");
    detail::require(nodes.size() >= 5, "grid: N_psi must be at least 5");
    detail::require(nodes.front() == 0.0, "grid: first psi node must be exactly 0");
    for (std::size_t j = 1; j < nodes.size(); ++j)
      detail::require(nodes[j] > nodes[j - 1], "grid: psi nodes must be strictly increasing");
    detail::require(nodes.back() >= kMinPsiMax, "grid: psi_max must be at least 20");
    Grid g;
    g.n_s_ = n_s;
    g.psi_ = std::move(nodes);
    return g;
  }

  std::size_t n_s() const { return n_s_; }
  std::size_t n_psi() const { return psi_.size(); }
  double psi_max() const { return psi_.back(); }
  std::span<const double> psi_nodes() const { return psi_; }
  bool is_uniform() const {
    const double h = psi_[1] - psi_[0];
    for (std::size_t j = 2; j < psi_.size(); ++j)
      if (std::abs(psi_[j] - psi_[j - 1] - h) > 1e-12 * psi_max()) return false;
    return true;
  }

 private:
  std::size_t n_s_ = 0;
  std::vector<double> psi_;
};

/// Real field on the (s, psi) tensor grid, dense row-major by s.
class Field {
 public:
  Field() = default;
  Field(std::size_t n_s, std::size_t n_psi, double fill = 0.0)
      : n_s_(n_s), n_psi_(n_psi), values_(n_s * n_psi, fill) {}
  explicit Field(const Grid& grid, double fill = 0.0) : Field(grid.n_s(), grid.n_psi(), fill) {}

  std::size_t n_s() const { return n_s_; }
  std::size_t n_psi() const { return n_psi_; }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_psi_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_psi_ + j]; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * n_psi_, n_psi_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_psi_, n_psi_}; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(n_s_);
    for (std::size_t i = 0; i < n_s_; ++i) c[i] = (*this)(i, j);
    return c;
  }
  void set_column(std::size_t j, std::span<const double> c) {
    for (std::size_t i = 0; i < n_s_; ++i) (*this)(i, j) = c[i];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  bool same_shape(const Field& o) const { return n_s_ == o.n_s_ && n_psi_ == o.n_psi_; }

  Field& operator+=(const Field& o) {
    detail::require(same_shape(o), "field shape mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  Field& operator-=(const Field& o) {
    detail::require(same_shape(o), "field shape mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  Field& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double a, Field b) { return b *= a; }

  bool operator==(const Field&) const = default;

 private:
  std::size_t n_s_ = 0;
  std::size_t n_psi_ = 0;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// psi-direction finite differences
// ---------------------------------------------------------------------------

namespace detail {

// Fornberg's recursion: weights[d][j] for derivative order d at z.
inline std::vector<std::vector<double>> fornberg(double z, std::span<const double> x, int max_order) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> c(static_cast<std::size_t>(max_order) + 1,
                                     std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min(static_cast<int>(i), max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace detail

/// Second-order psi stencils on an arbitrary node set: centered three-point
/// in the interior, one-sided (3 points for d1, 4 points for d2) at the ends.
class PsiStencil {
 public:
  struct Row {
    std::size_t first;
    std::vector<double> w;
  };

  explicit PsiStencil(std::span<const double> nodes) : nodes_(nodes.begin(), nodes.end()) {
    const std::size_t n = nodes_.size();
    detail::require(n >= 5, "psi stencil: need at least 5 nodes");
    d1_.resize(n);
    d2_.resize(n);
    auto make = [&](std::size_t j, std::size_t first, std::size_t count, int order) {
      std::span<const double> sub(nodes_.data() + first, count);
      auto w = detail::fornberg(nodes_[j], sub, order);
      return Row{first, w[static_cast<std::size_t>(order)]};
    };
    d1_[0] = make(0, 0, 3, 1);
    d2_[0] = make(0, 0, 4, 2);
    d1_[n - 1] = make(n - 1, n - 3, 3, 1);
    d2_[n - 1] = make(n - 1, n - 4, 4, 2);
    for (std::size_t j = 1; j + 1 < n; ++j) {
      d1_[j] = make(j, j - 1, 3, 1);
      d2_[j] = make(j, j - 1, 3, 2);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  const Row& d1_row(std::size_t j) const { return d1_[j]; }
  const Row& d2_row(std::size_t j) const { return d2_[j]; }

  void d1(std::span<const double> in, std::span<double> out) const { apply(d1_, in, out); }
  void d2(std::span<const double> in, std::span<double> out) const { apply(d2_, in, out); }

  std::vector<double> d1(std::span<const double> in) const {
    std::vector<double> out(in.size());
    d1(in, out);
    return out;
  }
  std::vector<double> d2(std::span<const double> in) const {
    std::vector<double> out(in.size());
    d2(in, out);
    return out;
  }

 private:
  static void apply(const std::vector<Row>& rows, std::span<const double> in, std::span<double> out) {
    detail::require(in.size() == rows.size() && out.size() == rows.size(),
                    "psi stencil: profile length mismatch");
    for (std::size_t j = 0; j < rows.size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rows[j].w.size(); ++k) acc += rows[j].w[k] * in[rows[j].first + k];
      out[j] = acc;
    }
  }

  std::vector<double> nodes_;
  std::vector<Row> d1_;
  std::vector<Row> d2_;
};

inline Field d_dpsi(const Field& f, const Grid& grid) {
  PsiStencil st(grid.psi_nodes());
  Field out(f.n_s(), f.n_psi());
  for (std::size_t i = 0; i < f.n_s(); ++i) st.d1(f.row(i), out.row(i));
  return out;
}

inline Field d2_dpsi2(const Field& f, const Grid& grid) {
  PsiStencil st(grid.psi_nodes());
  Field out(f.n_s(), f.n_psi());
  for (std::size_t i = 0; i < f.n_s(); ++i) st.d2(f.row(i), out.row(i));
  return out;
}

/// Spectral s-derivative of every psi column.
inline Field d_ds(const Field& f, double length, int order = 1) {
  Field out(f.n_s(), f.n_psi());
  for (std::size_t j = 0; j < f.n_psi(); ++j)
    out.set_column(j, periodic_derivative(f.column(j), length, order));
  return out;
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

/// Trapezoid weights on the node set.
inline std::vector<double> trapezoid_weights(std::span<const double> nodes) {
  std::vector<double> w(nodes.size(), 0.0);
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const double h = nodes[j + 1] - nodes[j];
    w[j] += 0.5 * h;
    w[j + 1] += 0.5 * h;
  }
  return w;
}

/// Trapezoid rule of (1+psi)^m * profile over the node set.
inline double integrate_psi(std::span<const double> profile, std::span<const double> nodes,
                            int weight_power = 0) {
  detail::require(profile.size() == nodes.size(), "integrate_psi: length mismatch");
  detail::require(weight_power >= 0, "integrate_psi: weight power must be nonnegative");
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const double h = nodes[j + 1] - nodes[j];
    const double a = std::pow(1.0 + nodes[j], weight_power) * profile[j];
    const double b = std::pow(1.0 + nodes[j + 1], weight_power) * profile[j + 1];
    acc += 0.5 * h * (a + b);
  }
  return acc;
}

/// Rectangle rule over one period of uniformly spaced samples.
inline double integrate_s(std::span<const double> profile, double length) {
  detail::require(!profile.empty(), "integrate_s: empty profile");
  double acc = 0.0;
  for (double v : profile) acc += v;
  return acc * length / static_cast<double>(profile.size());
}

/// T(psi_j) = int_{psi_j}^{psi_max} profile, cumulative trapezoid from the far end.
inline std::vector<double> tail_integral(std::span<const double> profile, std::span<const double> nodes) {
  detail::require(profile.size() == nodes.size(), "tail_integral: length mismatch");
  const std::size_t n = nodes.size();
  std::vector<double> t(n, 0.0);
  for (std::size_t j = n - 1; j-- > 0;)
    t[j] = t[j + 1] + 0.5 * (nodes[j + 1] - nodes[j]) * (profile[j] + profile[j + 1]);
  return t;
}

/// D(psi) = int_psi^inf int_{psi'}^inf profile = int_psi^inf (y - psi) profile(y) dy,
/// evaluated as two cumulative trapezoid passes from the far end. D(0) is the
/// first-moment quadrature used by every compatibility computation.
inline std::vector<double> double_tail_integral(std::span<const double> profile,
                                                std::span<const double> nodes) {
  auto once = tail_integral(profile, nodes);
  return tail_integral(once, nodes);
}

inline double first_moment(std::span<const double> profile, std::span<const double> nodes) {
  return double_tail_integral(profile, nodes).front();
}

/// psi-profile of s-integrals: out[j] = int_0^L weight(s) f(s, psi_j) ds.
inline std::vector<double> integrate_s_columns(const Field& f, double length,
                                               std::span<const double> weight = {}) {
  std::vector<double> out(f.n_psi(), 0.0);
  for (std::size_t i = 0; i < f.n_s(); ++i) {
    const double w = weight.empty() ? 1.0 : weight[i];
    auto r = f.row(i);
    for (std::size_t j = 0; j < f.n_psi(); ++j) out[j] += w * r[j];
  }
  const double ds = length / static_cast<double>(f.n_s());
  for (double& v : out) v *= ds;
  return out;
}

// ---------------------------------------------------------------------------
// monotone periodic change of variable t = J(s)
// ---------------------------------------------------------------------------

/// J(s) = int_0^s speed, for a strictly positive speed sampled on a uniform
/// periodic s-grid. Maps [0, L) onto [0, L_t) with L_t = mean(speed) * L.
class MonotoneMap {
 public:
  MonotoneMap(std::span<const double> speed_samples, double length) : length_(length) {
    detail::require(speed_samples.size() >= 2, "monotone map: too few samples");
    for (double v : speed_samples) {
      if (!(v > 0.0))
        throw Error(ErrorKind::non_monotone_map, "non-monotone map: speed must be strictly positive", v);
    }
    speed_ = TrigInterpolant(speed_samples, length);
    // Band-limited reconstruction can dip below zero between samples even when
    // every sample is positive; reject that too.
    const std::size_t fine = 8 * speed_samples.size();
    for (std::size_t k = 0; k < fine; ++k) {
      const double v = speed_(length * static_cast<double>(k) / static_cast<double>(fine));
      if (!(v > 0.0))
        throw Error(ErrorKind::non_monotone_map, "non-monotone map: interpolated speed vanishes", v);
    }
    period_t_ = speed_.mean() * length;
  }

  double length() const { return length_; }
  double period_t() const { return period_t_; }
  double mean_speed() const { return speed_.mean(); }
  double speed(double s) const { return speed_(s); }
  double operator()(double s) const { return speed_.integral(s); }

  /// s with J(s) = t, t in [0, L_t]. Newton with bisection safeguard.
  double inverse(double t) const {
    double lo = 0.0;
    double hi = length_;
    double s = t / speed_.mean();
    s = std::clamp(s, lo, hi);
    for (int it = 0; it < 200; ++it) {
      const double r = (*this)(s) - t;
      if (std::abs(r) <= 1e-15 * period_t_) break;
      if (r > 0.0) hi = s; else lo = s;
      double next = s - r / speed_(s);
      if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) <= 1e-16 * length_) { s = next; break; }
      s = next;
    }
    return s;
  }

  std::vector<double> forward_samples(std::size_t n) const {
    std::vector<double> j(n);
    for (std::size_t i = 0; i < n; ++i)
      j[i] = (*this)(length_ * static_cast<double>(i) / static_cast<double>(n));
    return j;
  }

 private:
  double length_;
  double period_t_ = 0.0;
  TrigInterpolant speed_;
};

/// Resampling between the uniform s-grid (n_s samples) and the uniform t-grid
/// (n_t samples) of a MonotoneMap, by trigonometric interpolation at the
/// non-uniform preimages. n_t > n_s oversamples the t side.
class MapResampler {
 public:
  MapResampler(const MonotoneMap& map, std::size_t n_s, std::size_t n_t = 0)
      : to_t_(make_to_t(map, n_s, n_t ? n_t : n_s)), to_s_(make_to_s(map, n_s, n_t ? n_t : n_s)) {}

  std::vector<double> s_to_t(std::span<const double> profile) const { return to_t_.apply(profile); }
  std::vector<double> t_to_s(std::span<const double> profile) const { return to_s_.apply(profile); }

  Field s_to_t(const Field& f) const { return apply_columns(to_t_, f); }
  Field t_to_s(const Field& f) const { return apply_columns(to_s_, f); }

 private:
  static TrigResampler make_to_t(const MonotoneMap& map, std::size_t n_s, std::size_t n_t) {
    std::vector<double> pre(n_t);
    for (std::size_t j = 0; j < n_t; ++j)
      pre[j] = map.inverse(map.period_t() * static_cast<double>(j) / static_cast<double>(n_t));
    return TrigResampler(n_s, map.length(), pre);
  }
  static TrigResampler make_to_s(const MonotoneMap& map, std::size_t n_s, std::size_t n_t) {
    return TrigResampler(n_t, map.period_t(), map.forward_samples(n_s));
  }
  static Field apply_columns(const TrigResampler& r, const Field& f) {
    Field out(r.target_size(), f.n_psi());
    for (std::size_t j = 0; j < f.n_psi(); ++j) out.set_column(j, r.apply(f.column(j)));
    return out;
  }

  TrigResampler to_t_;
  TrigResampler to_s_;
};

inline std::vector<double> resample_s(std::span<const double> profile, const MonotoneMap& map) {
  return MapResampler(map, profile.size()).s_to_t(profile);
}

inline std::vector<double> resample_t(std::span<const double> profile, const MonotoneMap& map) {
  return MapResampler(map, profile.size()).t_to_s(profile);
}

// ---------------------------------------------------------------------------
// field dump: "# s psi Q" then one triple per line, row-major by s
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_field_dump(std::ostream& os, std::span<const double> s_grid,
                             std::span<const double> psi_nodes, const Field& f,
                             bool blank_line_between_rows = false) {
  detail::require(s_grid.size() == f.n_s() && psi_nodes.size() == f.n_psi(),
                  "field dump: grid does not match field");
  os << "# s psi Q\n";
  for (std::size_t i = 0; i < f.n_s(); ++i) {
    for (std::size_t j = 0; j < f.n_psi(); ++j)
      os << format_double(s_grid[i]) << ' ' << format_double(psi_nodes[j]) << ' '
         << format_double(f(i, j)) << '\n';
    if (blank_line_between_rows) os << '\n';
  }
}

struct FieldDump {
  std::vector<double> s;
  std::vector<double> psi;
  Field values;
};

namespace detail {
inline double parse_strict_double(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": invalid number '" +
                                      std::string(tok) + "'");
  return v;
}
}  // namespace detail

inline FieldDump read_field_dump(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::array<double, 3>> triples;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header) {
      if (line != "# s psi Q") throw Error(ErrorKind::parse, "field dump: missing '# s psi Q' header");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::array<double, 3> t{};
    std::string tok;
    for (double& v : t) {
      if (!(ls >> tok)) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected 3 columns");
      v = detail::parse_strict_double(tok, line_no);
    }
    if (ls >> tok) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": trailing data");
    triples.push_back(t);
  }
  if (!header || triples.empty()) throw Error(ErrorKind::parse, "field dump: no data");
  FieldDump d;
  for (const auto& t : triples) {
    if (t[0] != triples.front()[0]) break;
    d.psi.push_back(t[1]);
  }
  const std::size_t n_psi = d.psi.size();
  if (triples.size() % n_psi != 0) throw Error(ErrorKind::parse, "field dump: ragged rows");
  const std::size_t n_s = triples.size() / n_psi;
  d.values = Field(n_s, n_psi);
  for (std::size_t i = 0; i < n_s; ++i) {
    d.s.push_back(triples[i * n_psi][0]);
    for (std::size_t j = 0; j < n_psi; ++j) {
      const auto& t = triples[i * n_psi + j];
      if (t[0] != d.s.back() || t[1] != d.psi[j]) throw Error(ErrorKind::parse, "field dump: not a tensor grid");
      d.values(i, j) = t[2];
    }
  }
  return d;
}

}  // namespace pbl
