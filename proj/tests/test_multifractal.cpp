#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "cookiezeta/multifractal.hpp"
#include "cookiezeta/oracle.hpp"
#include "fixtures.hpp"

using namespace cookiezeta;
using fixtures::alpha0;
using fixtures::cantor_dim;
using fixtures::ln3;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

const auto phi = Potential::log_derivative();

}  // namespace

TEST(Regularity, Examples) {
  auto map = fixtures::cantor();
  auto level = dynamics::basic_intervals(map, 2);
  EXPECT_NEAR(multifractal::regularity(level[1], 0.21), 0.710282, 1e-6);
  EXPECT_NEAR(multifractal::regularity(level[1], 0.21), alpha0, 1e-14);
  auto l5 = dynamics::basic_intervals(map, 5);
  EXPECT_NEAR(multifractal::regularity(l5[7], std::pow(0.5, 5)), cantor_dim, 1e-14);
  EXPECT_NEAR(multifractal::regularity(l5[3], l5[3].length), 1.0, 1e-15);
  EXPECT_EQ(kind_of([&] { multifractal::regularity(l5[0], 0.0); }), ErrorKind::ZeroMeasureInterval);
}

TEST(IAlpha, Examples) {
  auto map = fixtures::cantor();
  auto r = multifractal::i_alpha(map, fixtures::bernoulli(0.3), alpha0, 14);
  EXPECT_NEAR(r.lo, -0.423649, 1e-6);
  EXPECT_NEAR(r.hi, 0.423649, 1e-6);
  EXPECT_EQ(r.lo_word, Word::from_one_based({1}));
  EXPECT_EQ(r.hi_word, Word::from_one_based({2}));
  EXPECT_TRUE(r.contains_zero_strictly);

  auto out = multifractal::i_alpha(map, fixtures::bernoulli(0.3), 1.2, 14);
  EXPECT_NEAR(out.lo, 0.114362, 1e-6);
  EXPECT_NEAR(out.hi, 0.961660, 1e-6);
  EXPECT_FALSE(out.contains_zero_strictly);

  auto flat = multifractal::i_alpha(map, fixtures::bernoulli(0.5), cantor_dim, 14);
  EXPECT_NEAR(flat.lo, 0.0, 1e-14);
  EXPECT_NEAR(flat.hi, 0.0, 1e-14);
  EXPECT_FALSE(flat.contains_zero_strictly);
}

TEST(AlphaRange, Examples) {
  auto map = fixtures::cantor();
  auto r = multifractal::alpha_range(map, fixtures::bernoulli(0.3), 14);
  EXPECT_NEAR(r.min, 0.324659, 1e-6);
  EXPECT_NEAR(r.max, fixtures::alpha_max, 1e-14);
  EXPECT_GT(1.2, r.max);  // consistent with i_alpha excluding 0 at alpha = 1.2
  auto half = multifractal::alpha_range(map, fixtures::bernoulli(0.5), 14);
  EXPECT_NEAR(half.min, cantor_dim, 1e-14);
  EXPECT_NEAR(half.max, cantor_dim, 1e-14);
}

TEST(DeltaAlphaOfXi, Examples) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  EXPECT_NEAR(multifractal::delta_alpha_of_xi(map, psi, alpha0, 0.0, 6), cantor_dim, 1e-12);
  EXPECT_NEAR(multifractal::delta_alpha_of_xi(map, psi, alpha0, 1.0, 6), alpha0, 1e-12);
  for (double alpha : {0.4, 0.9}) {
    for (double xi : {-2.0, 0.5, 3.0}) {
      EXPECT_NEAR(multifractal::delta_alpha_of_xi(map, fixtures::bernoulli(0.5), alpha, xi, 4),
                  cantor_dim + xi * (alpha - cantor_dim), 1e-12);
    }
  }
}

TEST(XiAlpha, Examples) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  auto at0 = multifractal::xi_alpha(map, psi, alpha0, 6);
  EXPECT_NEAR(at0.xi, 0.0, 1e-6);
  EXPECT_NEAR(at0.delta, 0.630930, 1e-6);
  EXPECT_LT(std::abs(at0.derivative), 1e-8);

  auto pt = multifractal::xi_alpha(map, psi, 0.9, 6);
  auto ref = oracle::bernoulli_spectrum(0.3, 0.9);
  EXPECT_NEAR(pt.delta, ref.delta, 1e-8);
  EXPECT_NEAR(pt.xi, ref.xi, 1e-6);

  EXPECT_EQ(kind_of([&] { multifractal::xi_alpha(map, psi, 1.2, 6); }), ErrorKind::ZeroNotInterior);
  EXPECT_EQ(kind_of([&] { multifractal::xi_alpha(map, psi, fixtures::alpha_max, 6); }), ErrorKind::ZeroNotInterior);
  EXPECT_EQ(kind_of([&] { multifractal::xi_alpha(map, fixtures::bernoulli(0.5), cantor_dim, 6); }),
            ErrorKind::ConditionAViolated);
}

TEST(TauPressure, Examples) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  EXPECT_NEAR(multifractal::tau_pressure(map, psi, 0.0, 6), 0.630930, 1e-6);
  EXPECT_NEAR(multifractal::tau_pressure(map, psi, 1.0, 6), 0.0, 1e-12);
  // ln(0.58)/ln3 = -0.4958320; the quoted -0.495829 is a rounding slip
  EXPECT_NEAR(multifractal::tau_pressure(map, psi, 2.0, 6), -0.495829, 5e-6);
  EXPECT_NEAR(multifractal::tau_pressure(map, psi, 2.0, 6), oracle::bernoulli_tau(0.3, 2.0), 1e-12);
  EXPECT_EQ(kind_of([&] { multifractal::tau_pressure(map, Potential::zero(), 1.0, 6); }), ErrorKind::NotNormalized);
}

TEST(TauPartition, Examples) {
  auto map = fixtures::cantor();
  const std::vector<int> levels{14, 16, 18};
  auto t2 = multifractal::tau_partition(map, fixtures::bernoulli(0.3), 2.0, levels, 10);
  EXPECT_NEAR(t2.value, 0.495832, 5e-3);
  auto t1 = multifractal::tau_partition(map, fixtures::bernoulli(0.3), 1.0, levels, 10);
  EXPECT_NEAR(t1.value, 0.0, 5e-3);
  auto t0 = multifractal::tau_partition(map, fixtures::bernoulli(0.5), 0.0, levels, 10);
  EXPECT_NEAR(t0.value, -cantor_dim, 5e-3);
}

TEST(SpectrumCurve, CantorBernoulli) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  std::vector<double> grid;
  for (int i = 0; i < 21; ++i) grid.push_back(0.33 + (1.09 - 0.33) * i / 20.0);
  auto c = multifractal::spectrum_curve(map, psi, grid, 6);
  const double step = grid[1] - grid[0];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ASSERT_TRUE(c.points[i].has_value()) << c.errors[i];
    EXPECT_NEAR(c.points[i]->delta, oracle::bernoulli_spectrum(0.3, grid[i]).delta, 1e-8);
    // Legendre duality: delta_alpha = inf_q T(q) + alpha q
    const double xi = c.points[i]->xi;
    EXPECT_NEAR(c.points[i]->delta, oracle::bernoulli_tau(0.3, xi) + grid[i] * xi, 1e-8);
  }
  EXPECT_TRUE(c.concave);
  EXPECT_NEAR(c.argmax_alpha, alpha0, step);
  EXPECT_LE(c.max_delta, cantor_dim + 1e-12);
  EXPECT_GT(c.max_delta, cantor_dim - 0.01);
}

TEST(SpectrumCurve, RightEndpointTail) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  std::vector<double> grid;
  for (double gap : {0.05, 0.02, 0.01, 0.005}) grid.push_back(fixtures::alpha_max - gap);
  auto c = multifractal::spectrum_curve(map, psi, grid, 4);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LT(c.points[i]->delta, c.points[i - 1]->delta);
  EXPECT_LT(c.points.back()->delta, 0.05);
}

TEST(SpectrumCurve, ErrorsCollected) {
  auto map = fixtures::cantor();
  std::vector<double> grid{0.5, 1.2, 0.9};
  auto c = multifractal::spectrum_curve(map, fixtures::bernoulli(0.3), grid, 4);
  EXPECT_TRUE(c.points[0].has_value());
  EXPECT_FALSE(c.points[1].has_value());
  EXPECT_NE(c.errors[1].find("ZeroNotInterior"), std::string::npos);
  EXPECT_TRUE(c.points[2].has_value());
}

TEST(SpectrumCurve, MoebiusConcaveBelowDimension) {
  auto map = fixtures::moebius();
  auto psi = fixtures::bernoulli(0.4);
  const int m = 10;
  auto range = multifractal::alpha_range(map, psi, 14);
  std::vector<double> grid;
  for (int i = 1; i < 12; ++i) grid.push_back(range.min + (range.max - range.min) * i / 12.0);
  auto c = multifractal::spectrum_curve(map, psi, grid, m);
  for (std::size_t i = 0; i < grid.size(); ++i) ASSERT_TRUE(c.points[i].has_value()) << c.errors[i];
  EXPECT_TRUE(c.concave);
  EXPECT_LE(c.max_delta, thermo::solve_bowen(map, m) + 1e-6);
}

// Properties

TEST(Properties, LegendreIdentity) {
  for (auto map : {fixtures::cantor(), fixtures::moebius()}) {
    auto psi = fixtures::bernoulli(0.4);
    multifractal::SpectrumSolver solver(map, psi, 8);
    for (double alpha : {0.5, 0.8}) {
      for (double xi = -3.0; xi <= 3.0; xi += 0.75) {
        EXPECT_NEAR(solver.delta(alpha, xi), solver.tau(xi) + alpha * xi, 1e-10);
      }
    }
  }
}

TEST(Properties, Convexity) {
  auto map = fixtures::moebius();
  auto psi = fixtures::bernoulli(0.4);
  multifractal::SpectrumSolver solver(map, psi, 8);
  std::vector<double> q, t, d;
  for (double x = -4.0; x <= 4.0; x += 0.5) {
    q.push_back(x);
    t.push_back(solver.tau(x));
    d.push_back(solver.delta(0.8, x));
  }
  for (std::size_t i = 1; i + 1 < q.size(); ++i) {
    EXPECT_GT(t[i + 1] - 2 * t[i] + t[i - 1], 0.0);
    EXPECT_GT(d[i + 1] - 2 * d[i] + d[i - 1], 0.0);
  }
  // p = 1/2 on the Cantor map: flat up to rounding
  auto cantor = fixtures::cantor();
  multifractal::SpectrumSolver flat(cantor, fixtures::bernoulli(0.5), 4);
  for (double x = -2.0; x <= 2.0; x += 0.5) {
    const double s2 = flat.tau(x + 0.5) - 2 * flat.tau(x) + flat.tau(x - 0.5);
    EXPECT_NEAR(s2, 0.0, 1e-8);
  }
}

TEST(Properties, CriticalityEquivalence) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  for (double alpha : {0.5, 0.9}) {
    auto pt = multifractal::xi_alpha(map, psi, alpha, 6);
    auto f = psi - alpha * phi;
    auto tilted = pt.delta * phi + pt.xi * f;
    auto g = thermo::gibbs_weights(map, tilted, 10, 6);
    EXPECT_NEAR(thermo::measure_integral(map, g, f, 10), 0.0, 1e-5);
  }
}

TEST(Properties, TauBridge) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  const std::vector<int> levels{14, 16, 18};
  for (double q : {-1.0, 0.0, 2.0}) {
    const double part = multifractal::tau_partition(map, psi, q, levels, 10).value;
    EXPECT_NEAR(part + multifractal::tau_pressure(map, psi, q, 6), 0.0, 5e-3) << "q = " << q;
  }
}

TEST(Properties, SpectrumBoundedByDimension) {
  auto map = fixtures::cantor();
  auto psi = fixtures::bernoulli(0.3);
  for (double alpha : {0.4, 0.6, alpha0, 0.8, 1.0}) {
    const double d = multifractal::xi_alpha(map, psi, alpha, 4).delta;
    EXPECT_LE(d, cantor_dim + 1e-12);
    if (std::abs(alpha - alpha0) > 1e-3) {
      EXPECT_LT(d, cantor_dim - 1e-4);
    }
  }
}
