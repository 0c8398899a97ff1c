#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "pbl/discretization.hpp"

using namespace pbl;

TEST(Grid, InvariantsEnforced) {
  auto g = Grid::uniform(16, 301, 30.0);
  EXPECT_EQ(g.psi_nodes().front(), 0.0);
  EXPECT_EQ(g.psi_max(), 30.0);
  EXPECT_TRUE(g.is_uniform());
  EXPECT_THROW(Grid::uniform(15, 301, 30.0), Error);
  EXPECT_THROW(Grid::uniform(6, 301, 30.0), Error);
  EXPECT_THROW(Grid::uniform(16, 4, 30.0), Error);
  EXPECT_THROW(Grid::uniform(16, 301, 10.0), Error);
  EXPECT_THROW(Grid::from_nodes(16, {0.0, 1.0, 1.0, 5.0, 25.0}), Error);
  EXPECT_THROW(Grid::from_nodes(16, {0.1, 1.0, 2.0, 5.0, 25.0}), Error);
}

TEST(PsiStencil, ExactOnQuadratics) {
  auto g = Grid::uniform(8, 101, 20.0);
  PsiStencil st(g.psi_nodes());
  std::vector<double> q(g.n_psi());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = g.psi_nodes()[j] * g.psi_nodes()[j];
  auto d2 = st.d2(q);
  auto d1 = st.d1(q);
  for (std::size_t j = 0; j < q.size(); ++j) {
    EXPECT_NEAR(d2[j], 2.0, 1e-9);
    EXPECT_NEAR(d1[j], 2.0 * g.psi_nodes()[j], 1e-10);
  }
}

TEST(PsiStencil, ConstantHasZeroDerivatives) {
  auto g = Grid::uniform(8, 51, 25.0);
  PsiStencil st(g.psi_nodes());
  std::vector<double> q(g.n_psi(), 3.25);
  for (double v : st.d1(q)) EXPECT_NEAR(v, 0.0, 1e-13);
  for (double v : st.d2(q)) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_THROW(PsiStencil(std::vector<double>{0, 1, 2, 3}), Error);
}

TEST(PsiStencil, SecondOrderConvergenceOnExponential) {
  double err_prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const std::size_t n = 101 * (1u << level) - ((1u << level) - 1);
    auto g = Grid::uniform(8, n, 20.0);
    PsiStencil st(g.psi_nodes());
    std::vector<double> q(n);
    for (std::size_t j = 0; j < n; ++j) q[j] = std::exp(-g.psi_nodes()[j]);
    auto d1 = st.d1(q);
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) err = std::max(err, std::abs(d1[j] + q[j]));
    if (level > 0) {
      const double ratio = err_prev / err;
      EXPECT_GT(ratio, 3.6);
      EXPECT_LT(ratio, 4.4);
    }
    err_prev = err;
  }
}

TEST(Quadrature, ExponentialIntegrals) {
  auto g = Grid::uniform(8, 301, 30.0);
  std::vector<double> e(g.n_psi()), ye(g.n_psi());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double p = g.psi_nodes()[j];
    e[j] = std::exp(-p);
    ye[j] = p * std::exp(-p);
  }
  // Trapezoid error estimate h^2/12 * (f'(b)-f'(a)) ~ 8.3e-4 for h = 0.1.
  EXPECT_NEAR(integrate_psi(e, g.psi_nodes()), 1.0 - std::exp(-30.0), 1e-3);
  const double h = 0.1;
  EXPECT_NEAR(integrate_psi(e, g.psi_nodes()), 1.0 + h * h / 12.0, 2e-6);
  EXPECT_NEAR(integrate_psi(ye, g.psi_nodes()), 1.0 - 31.0 * std::exp(-30.0), 2e-3);
  // Weighted: int (1+psi) e^{-psi} = 2.
  EXPECT_NEAR(integrate_psi(e, g.psi_nodes(), 1), 2.0, 3e-3);
}

TEST(Quadrature, HarmonicIntegratesToZeroInS) {
  const std::size_t n = 64;
  const double L = 7.0;
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = std::cos(2 * std::numbers::pi * i / n);
  EXPECT_NEAR(integrate_s(c, L), 0.0, 1e-14);
}

TEST(Quadrature, MonotoneAndLinear) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  auto g = Grid::uniform(8, 41, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(41), b(41), ab(41);
    for (std::size_t j = 0; j < 41; ++j) {
      a[j] = dist(rng);
      b[j] = dist(rng) - 0.5;
      ab[j] = 2.0 * a[j] - 3.0 * b[j];
    }
    EXPECT_GE(integrate_psi(a, g.psi_nodes()), 0.0);
    EXPECT_GE(first_moment(a, g.psi_nodes()), 0.0);
    EXPECT_NEAR(integrate_psi(ab, g.psi_nodes()),
                2.0 * integrate_psi(a, g.psi_nodes()) - 3.0 * integrate_psi(b, g.psi_nodes()), 1e-12);
  }
}

TEST(Quadrature, DoubleTailIntegralIsFirstMoment) {
  auto g = Grid::uniform(8, 601, 30.0);
  std::vector<double> e(g.n_psi());
  for (std::size_t j = 0; j < e.size(); ++j) e[j] = std::exp(-2.0 * g.psi_nodes()[j]);
  auto d = double_tail_integral(e, g.psi_nodes());
  // int_psi^inf (y - psi) e^{-2y} dy = e^{-2 psi} / 4; each trapezoid pass
  // carries relative error (2h)^2/12, so two passes give about 1.7e-3 at h = 0.05.
  for (std::size_t j = 0; j < e.size(); j += 50) {
    const double exact = 0.25 * std::exp(-2.0 * g.psi_nodes()[j]);
    EXPECT_NEAR(d[j], exact, 2e-3 * exact + 1e-15);
  }
}

TEST(MonotoneMap, UniformSpeedIsIdentityResampling) {
  const std::size_t n = 64;
  const double L = 2 * std::numbers::pi;
  std::vector<double> speed(n, 0.5);
  MonotoneMap map(speed, L);
  EXPECT_NEAR(map.period_t(), std::numbers::pi, 1e-14);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(3.0 * i) + 0.1 * i;
  auto t = resample_s(x, map);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(t[i], x[i], 1e-13);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(map(L * i / n), 0.5 * L * i / n, 1e-14);
}

TEST(MonotoneMap, RoundTripOnVariableSpeed) {
  const std::size_t n = 128;
  const double L = 9.0;
  std::vector<double> speed(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = L * i / n;
    speed[i] = 0.6 + 0.2 * std::cos(2 * std::numbers::pi * s / L) + 0.05 * std::sin(4 * std::numbers::pi * s / L);
    x[i] = std::exp(std::cos(2 * std::numbers::pi * s / L));
  }
  MonotoneMap map(speed, L);
  auto t = resample_s(x, map);
  auto back = resample_t(t, map);
  double mean_x = 0.0, mean_back = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(back[i], x[i], 1e-8);
    mean_x += x[i] / n;
    mean_back += back[i] / n;
  }
  EXPECT_NEAR(mean_x, mean_back, 1e-10);
}

TEST(MonotoneMap, FlatSpotRejected) {
  std::vector<double> speed(16, 1.0);
  speed[5] = 0.0;
  try {
    MonotoneMap map(speed, 1.0);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_monotone_map);
  }
}

TEST(FieldDump, RereadIsBitIdentical) {
  auto g = Grid::uniform(8, 21, 20.0);
  Field f(g);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist;
  for (double& v : f.values()) v = dist(rng) * 1e-3;
  std::vector<double> s(8);
  for (std::size_t i = 0; i < 8; ++i) s[i] = 0.1 * std::numbers::pi * i;
  std::stringstream ss;
  write_field_dump(ss, s, g.psi_nodes(), f);
  auto d = read_field_dump(ss);
  EXPECT_TRUE(d.values == f);
  EXPECT_EQ(d.s, s);
  EXPECT_EQ(std::vector<double>(g.psi_nodes().begin(), g.psi_nodes().end()), d.psi);
}

TEST(FieldDump, RejectsGarbage) {
  std::stringstream bad("# s psi Q\n0 0 nan\n");
  EXPECT_THROW(read_field_dump(bad), Error);
  std::stringstream noheader("0 0 1\n");
  EXPECT_THROW(read_field_dump(noheader), Error);
}
