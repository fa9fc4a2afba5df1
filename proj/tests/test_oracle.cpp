#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "cookiezeta/oracle.hpp"
#include "fixtures.hpp"

using namespace cookiezeta;
using fixtures::alpha0;
using fixtures::cantor_dim;

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

}  // namespace

TEST(OracleZeta, HalfHalfGeometricSum) {
  EXPECT_NEAR(oracle::bernoulli_cantor_zeta(0.5, cantor_dim, 0.5, 2.0, 1.0, 10), 1.965317, 1e-6);
  double geo = 0.0;
  for (int n = 1; n <= 10; ++n) geo += std::pow(2.0 / 3.0, n);
  EXPECT_NEAR(oracle::bernoulli_cantor_zeta(0.5, cantor_dim, 0.5, 2.0, 1.0, 10), geo, 1e-14);
}

TEST(OracleZeta, EntireRegimeConstantInN) {
  const double a = oracle::bernoulli_cantor_zeta(0.3, 1.2, 0.37, 2.72, 0.7, 10);
  for (int n : {12, 40, 200}) EXPECT_EQ(oracle::bernoulli_cantor_zeta(0.3, 1.2, 0.37, 2.72, 0.7, n), a);
}

TEST(OracleZeta, HitCountsMatchEnumeration) {
  auto z = oracle::bernoulli_cantor_levels(0.3, alpha0, 0.1, 10.0, 1.0, 2);
  EXPECT_EQ(z.hits[1], 4.0L);
  auto half = oracle::bernoulli_cantor_levels(0.5, cantor_dim, 0.5, 2.0, 1.0, 30);
  for (int n = 1; n <= 30; ++n) EXPECT_EQ(half.hits[n - 1], std::ldexp(1.0L, n));
}

TEST(OracleZeta, HitSymmetryUnderComplement) {
  // p <-> 1-p maps a word to its complement, which has the same log-value
  auto a = oracle::bernoulli_cantor_levels(0.3, 0.8, 0.2, 3.0, 1.0, 40);
  auto b = oracle::bernoulli_cantor_levels(0.7, 0.8, 0.2, 3.0, 1.0, 40);
  for (int n = 0; n < 40; ++n) EXPECT_EQ(a.hits[n], b.hits[n]);
}

TEST(OracleTau, Examples) {
  for (double p : {0.1, 0.3, 0.5}) {
    EXPECT_NEAR(oracle::bernoulli_tau(p, 0.0), cantor_dim, 1e-15);
    EXPECT_NEAR(oracle::bernoulli_tau(p, 1.0), 0.0, 1e-15);
  }
  EXPECT_NEAR(oracle::bernoulli_tau(0.3, 2.0), std::log(0.58) / std::log(3.0), 1e-15);
  EXPECT_NEAR(oracle::bernoulli_tau(0.3, 2.0), -0.495829, 5e-6);
}

TEST(OracleSpectrum, Examples) {
  auto s = oracle::bernoulli_spectrum(0.3, alpha0);
  EXPECT_NEAR(s.xi, 0.0, 1e-13);
  EXPECT_NEAR(s.delta, cantor_dim, 1e-13);
  EXPECT_NEAR(s.delta, 0.630930, 1e-6);
  double prev = 1.0;
  for (double gap : {1e-2, 1e-3, 1e-4, 1e-6}) {
    const double d = oracle::bernoulli_spectrum(0.3, fixtures::alpha_max - gap).delta;
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-4);
  auto flat = oracle::bernoulli_spectrum(0.5, cantor_dim);
  EXPECT_TRUE(flat.degenerate);
  EXPECT_NEAR(flat.delta, cantor_dim, 1e-15);
  EXPECT_EQ(kind_of([] { oracle::bernoulli_spectrum(0.3, 1.2); }), ErrorKind::AlphaOutOfRange);
  EXPECT_EQ(kind_of([] { oracle::bernoulli_spectrum(0.5, 0.7); }), ErrorKind::AlphaOutOfRange);
}

TEST(OracleSpectrum, LegendreGridInfimum) {
  for (double alpha : {0.4, 0.6, 0.9, 1.05}) {
    const auto s = oracle::bernoulli_spectrum(0.3, alpha);
    double best = std::numeric_limits<double>::infinity();
    // fine grid around the minimizer; the infimum is attained at s.xi
    for (int i = -2000; i <= 2000; ++i) {
      const double xi = s.xi + i * 1e-6;
      best = std::min(best, oracle::bernoulli_tau(0.3, xi) + alpha * xi);
    }
    EXPECT_NEAR(s.delta, best, 1e-10);
    EXPECT_LE(s.delta, best + 1e-15);
  }
}

TEST(OracleHalfHalf, ClosedForm) {
  EXPECT_NEAR(oracle::halfhalf_zeta_closed(1.0), 2.0, 1e-14);
  EXPECT_NEAR(oracle::halfhalf_zeta_closed(2.0), 2.0 / 7.0, 1e-15);
  EXPECT_EQ(kind_of([] { oracle::halfhalf_zeta_closed(std::log(2.0) / std::log(3.0)); }),
            ErrorKind::AtOrBelowAbscissa);
}

TEST(OracleVariance, Examples) {
  auto v = oracle::bernoulli_variance(0.3, alpha0);
  const double exact = std::pow((std::log(0.3) - std::log(0.7)) / 2, 2);
  EXPECT_NEAR(v.variance, exact, 1e-15);
  EXPECT_NEAR(v.variance, 0.179478, 1e-6);
  EXPECT_NEAR(v.omega, 1.0 / std::sqrt(2.0 * std::log(3.0) * exact), 1e-15);
  EXPECT_NEAR(v.omega, 1.592416, 1e-6);
  EXPECT_EQ(kind_of([] { oracle::bernoulli_variance(0.5, std::log(2.0) / std::log(3.0)); }),
            ErrorKind::DegenerateVariance);
}
