#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pbl/linear_solver.hpp"

using namespace pbl;

namespace {

constexpr double kPi = std::numbers::pi;

// Q = e^{-psi}(1 + cos(2 pi s / L)/2) with its exact source; b is shifted by a
// constant so the discrete zero mode is compatible.
LinearProblem manufactured(const BoundaryGeometry& geo, const Grid& grid, double omega) {
  const double L = geo.length;
  const double k = 2 * kPi / L;
  LinearProblem p{geo, omega, Field(grid), Field(), std::vector<double>(grid.n_s())};
  for (std::size_t i = 0; i < grid.n_s(); ++i) {
    const double s = geo.s_grid[i];
    for (std::size_t j = 0; j < grid.n_psi(); ++j) {
      const double e = std::exp(-grid.psi_nodes()[j]);
      p.F(i, j) = -0.5 * k * std::sin(k * s) * e - omega * geo.q_e[i] * e * (1 + 0.5 * std::cos(k * s));
    }
    p.b[i] = 1 + 0.5 * std::cos(k * s);
  }
  std::vector<double> q1(geo.q_e), q3(geo.size());
  for (std::size_t i = 0; i < q3.size(); ++i) q3[i] = std::pow(geo.q_e[i], 3);
  const double res = linear_compatibility_residual(p.F, p.G, p.b, geo, omega, grid);
  const double shift = -res * integrate_s(q3, L) / integrate_s(q1, L);
  for (double& v : p.b) v += shift;
  return p;
}

double manufactured_error(const BoundaryGeometry& geo, std::size_t n_psi) {
  auto grid = Grid::uniform(geo.size(), n_psi, 30.0);
  auto p = manufactured(geo, grid, 1.0);
  auto Q = solve_linear(p, grid);
  const double k = 2 * kPi / geo.length;
  double err = 0.0;
  for (std::size_t i = 0; i < grid.n_s(); ++i)
    for (std::size_t j = 0; j < grid.n_psi(); ++j) {
      const double exact = std::exp(-grid.psi_nodes()[j]) * (1 + 0.5 * std::cos(k * geo.s_grid[i]));
      err = std::max(err, std::abs(Q(i, j) - exact));
    }
  return err;
}

}  // namespace

TEST(TMap, DiskIsLinear) {
  auto geo = disk_geometry(1.0, 64);
  auto t = build_t_map(geo, 1.0);
  EXPECT_NEAR(t.L_t, kPi, 1e-14);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(t.J_samples[i], 0.5 * geo.s_grid[i], 1e-14);
  try {
    build_t_map(geo, -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parabolicity);
  }
}

TEST(TMap, EllipsePeriodMatchesQuadrature) {
  auto geo = ellipse_geometry(2.0, 128);
  auto t = build_t_map(geo, 1.0);
  for (std::size_t i = 1; i < 128; ++i) EXPECT_GT(t.J_samples[i], t.J_samples[i - 1]);
  EXPECT_EQ(t.J_samples[0], 0.0);
  EXPECT_NEAR(t.map(geo.length), geo.length * geo.mean_slip(), 1e-10);
  EXPECT_NEAR(t.L_t, geo.length * geo.mean_slip(), 1e-12);
}

TEST(SolveMode, PureDataDecay) {
  auto grid = Grid::uniform(8, 301, 30.0);
  std::vector<cplx> H(301, 0.0);
  auto V = solve_mode(1.0, 1.0, H, grid.psi_nodes());
  for (std::size_t j : {10u, 50u, 100u}) {
    const double psi = grid.psi_nodes()[j];
    EXPECT_NEAR(std::abs(V[j]), std::exp(-psi / std::sqrt(2.0)), 1e-10);
  }
  auto Z = solve_mode(4.0, 0.0, H, grid.psi_nodes());
  for (auto z : Z) EXPECT_EQ(z, cplx(0.0));
  EXPECT_THROW(solve_mode(0.0, 1.0, H, grid.psi_nodes()), Error);
}

TEST(SolveMode, ManufacturedSecondOrder) {
  // V = psi e^{-psi}: i V - V'' = (i psi + 2 - psi) e^{-psi}, V(0) = 0.
  double prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const std::size_t n = 300 * (1u << level) + 1;
    auto grid = Grid::uniform(8, n, 30.0);
    std::vector<cplx> H(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double p = grid.psi_nodes()[j];
      H[j] = (cplx(0.0, p) + 2.0 - p) * std::exp(-p);
    }
    auto V = solve_mode(1.0, 0.0, H, grid.psi_nodes());
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = grid.psi_nodes()[j];
      err = std::max(err, std::abs(V[j] - p * std::exp(-p)));
    }
    if (level > 0) {
      EXPECT_NEAR(std::log2(prev / err), 2.0, 0.2);
    }
    prev = err;
  }
}

TEST(SolveLinear, ZeroDataGivesZero) {
  auto geo = ellipse_geometry(2.0, 32);
  auto grid = Grid::uniform(32, 101, 20.0);
  LinearProblem p{geo, 1.0, Field(grid), Field(), std::vector<double>(32, 0.0)};
  auto Q = solve_linear(p, grid);
  EXPECT_EQ(Q.max_abs(), 0.0);
}

TEST(SolveLinear, SingleHarmonicMatchesModeSolve) {
  auto geo = disk_geometry(1.0, 64);
  auto grid = Grid::uniform(64, 301, 30.0);
  const double beta = 0.3;
  LinearProblem p{geo, 1.0, Field(grid), Field(), std::vector<double>(64)};
  for (std::size_t i = 0; i < 64; ++i) p.b[i] = beta * std::cos(2 * kPi * geo.s_grid[i] / geo.length);
  auto Q = solve_linear(p, grid);
  std::vector<cplx> H(301, 0.0);
  const double xi = 2 * kPi / build_t_map(geo, 1.0).L_t;
  auto V = solve_mode(xi, 0.5 * beta, H, grid.psi_nodes());
  for (std::size_t i = 0; i < 64; i += 5) {
    const cplx phase = std::polar(1.0, 2 * kPi * double(i) / 64.0);
    for (std::size_t j = 0; j < 301; j += 13)
      EXPECT_NEAR(Q(i, j), 2.0 * (V[j] * phase).real(), 1e-13);
  }
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(Q(i, 0), p.b[i], 1e-14);
}

TEST(SolveLinear, ManufacturedDiskSecondOrder) {
  auto geo = disk_geometry(1.0, 32);
  const double e1 = manufactured_error(geo, 301);
  const double e2 = manufactured_error(geo, 601);
  const double e3 = manufactured_error(geo, 1201);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.2);
  EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.2);
}

TEST(SolveLinear, ManufacturedEllipseSecondOrder) {
  auto geo = ellipse_geometry(2.0, 64);
  const double e1 = manufactured_error(geo, 301);
  const double e2 = manufactured_error(geo, 601);
  const double e3 = manufactured_error(geo, 1201);
  EXPECT_LT(e1, 1e-2);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.2);
  EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.2);
}

TEST(SolveLinear, BoundaryDataAndFarField) {
  auto geo = ellipse_geometry(2.0, 128);
  auto grid = Grid::uniform(128, 301, 30.0);
  auto p = manufactured(geo, grid, 1.0);
  auto Q = solve_linear(p, grid);
  for (std::size_t i = 0; i < 128; ++i) {
    EXPECT_NEAR(Q(i, 0), p.b[i], 1e-10);
    EXPECT_LT(std::abs(Q(i, 300)), 1e-8);
  }
}

TEST(SolveLinear, IncompatibleDataRejected) {
  auto geo = ellipse_geometry(2.0, 32);
  auto grid = Grid::uniform(32, 101, 20.0);
  LinearProblem p{geo, 1.0, Field(grid), Field(), std::vector<double>(32, 1e-3)};
  try {
    solve_linear(p, grid);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::compatibility);
    EXPECT_NE(std::string(e.what()).find("compatibility violated"), std::string::npos);
    EXPECT_GT(std::abs(e.value()), 1e-8);
  }
}

TEST(SolveLinear, LinearityAndDeterminism) {
  auto geo = ellipse_geometry(2.0, 64);
  auto grid = Grid::uniform(64, 201, 25.0);
  auto p1 = manufactured(geo, grid, 1.1);
  // Second compatible problem: oscillatory data with a G source.
  LinearProblem p2{geo, 1.1, Field(grid), Field(grid), std::vector<double>(64)};
  for (std::size_t i = 0; i < 64; ++i) {
    const double s = geo.s_grid[i];
    p2.b[i] = std::sin(2 * 2 * kPi * s / geo.length);
    for (std::size_t j = 0; j < grid.n_psi(); ++j) {
      const double e = std::exp(-2.0 * grid.psi_nodes()[j]);
      p2.G(i, j) = 0.1 * std::cos(2 * kPi * s / geo.length) * e;
    }
  }
  const double shift = -linear_compatibility_residual(p2.F, p2.G, p2.b, geo, 1.1, grid) *
                       [&] { std::vector<double> q3(64); for (std::size_t i = 0; i < 64; ++i) q3[i] = std::pow(geo.q_e[i], 3); return integrate_s(q3, geo.length); }() /
                       integrate_s(geo.q_e, geo.length);
  for (double& v : p2.b) v += shift;
  const double a = 0.7, c = -1.3;
  LinearProblem p12{geo, 1.1, a * p1.F + c * p2.F, c * p2.G, std::vector<double>(64)};
  p12.F = a * p1.F;
  p12.F += c * p2.F;
  for (std::size_t i = 0; i < 64; ++i) p12.b[i] = a * p1.b[i] + c * p2.b[i];
  // Empty G in p1 behaves like zero.
  auto Q1 = solve_linear(p1, grid);
  auto Q2 = solve_linear(p2, grid);
  auto Q12 = solve_linear(p12, grid);
  auto diff = Q12 - (a * Q1 + c * Q2);
  EXPECT_LT(diff.max_abs(), 1e-10);
  EXPECT_TRUE(solve_linear(p2, grid) == Q2);
}

TEST(SolveLinear, ConstantSlipDecouplesModes) {
  auto geo = disk_geometry(1.0, 32);
  auto grid = Grid::uniform(32, 101, 20.0);
  LinearProblem p{geo, 1.0, Field(grid), Field(), std::vector<double>(32)};
  for (std::size_t i = 0; i < 32; ++i) p.b[i] = std::cos(3 * 2 * kPi * geo.s_grid[i] / geo.length);
  auto Q = solve_linear(p, grid);
  for (std::size_t j = 0; j < grid.n_psi(); ++j) {
    auto c = dft_s(Q.column(j));
    for (std::size_t k = 0; k < 32; ++k)
      if (k != 3 && k != 29) {
        EXPECT_LT(std::abs(c[k]), 1e-12);
      }
  }
}

TEST(ZeroMode, TrivialAndClosedForm) {
  auto geo = ellipse_geometry(2.0, 32);
  auto grid = Grid::uniform(32, 601, 30.0);
  Field F(grid), G, Qnz(grid);
  std::vector<double> b(32, 0.0);
  auto z = solve_zero_mode(F, G, b, geo, 1.0, Qnz, grid);
  for (double v : z) EXPECT_EQ(v, 0.0);
  // F = -q_e e^{-psi}: Q0 = e^{-psi} / <q_e> * <q_e> = e^{-psi} with b chosen compatible.
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < grid.n_psi(); ++j) F(i, j) = -geo.mean_slip() * std::exp(-grid.psi_nodes()[j]);
  const double fm = first_moment(integrate_s_columns(F, geo.length), grid.psi_nodes());
  std::vector<double> q3(32);
  for (std::size_t i = 0; i < 32; ++i) q3[i] = std::pow(geo.q_e[i], 3);
  for (std::size_t i = 0; i < 32; ++i) b[i] = -fm / integrate_s(geo.q_e, geo.length);
  z = solve_zero_mode(F, G, b, geo, 1.0, Qnz, grid);
  // Exact double tail integral truncated at psi_max; two trapezoid passes
  // carry relative error about 2 h^2/12 = 4.2e-4 at h = 0.05.
  for (std::size_t j = 0; j < grid.n_psi(); j += 20) {
    const double p = grid.psi_nodes()[j];
    const double exact = std::exp(-p) - std::exp(-30.0) * (31.0 - p);
    EXPECT_NEAR(z[j], exact, 5e-4 * exact + 1e-15);
  }
  EXPECT_EQ(z.back(), 0.0);
}
