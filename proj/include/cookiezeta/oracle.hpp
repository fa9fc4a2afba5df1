#pragma once

// Closed forms for the middle-third Cantor map carrying the (p, 1-p)
// Bernoulli measure. Nothing here uses the rest of the library, so a
// disagreement with it points at one side or the other.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cookiezeta/error.hpp"

namespace cookiezeta::oracle {

inline constexpr int max_levels = 5000;

inline double cantor_dimension() { return std::log(2.0) / std::log(3.0); }

namespace detail {

inline void check_p(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::InvalidArgument, "p must lie in (0, 1)");
}

/// log C(n, j) for j = 0..n
inline std::vector<double> log_binomials(int n) {
  std::vector<double> out(static_cast<std::size_t>(n + 1));
  const double top = std::lgamma(n + 1.0);
  for (int j = 0; j <= n; ++j) out[static_cast<std::size_t>(j)] = top - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
  return out;
}

}  // namespace detail

struct ZetaLevels {
  std::vector<double> terms;       // w_n = sum over hits of |I|^sigma, n = 1..N
  std::vector<long double> hits;   // number of hit words per level (exceeds double range past n ~ 1000)
  double sum = 0.0;
};

/// Per-level terms of the multifractal zeta function: a word with j ones
/// has log-value j u1 + (n-j) u2, u1 = ln p + alpha ln3, u2 = ln(1-p) + alpha ln3,
/// and counts when that value lies in [ln a, ln b].
inline ZetaLevels bernoulli_cantor_levels(double p, double alpha, double a, double b, double sigma, int levels) {
  detail::check_p(p);
  if (!(a > 0.0 && b > a)) fail(ErrorKind::InvalidArgument, "need 0 < a < b");
  if (levels < 1 || levels > max_levels) fail(ErrorKind::LevelTooLarge, "oracle supports 1..5000 levels");
  const double ln3 = std::log(3.0);
  const double lp = std::log(p), lq = std::log(1.0 - p);
  const double la = std::log(a), lb = std::log(b);
  ZetaLevels z;
  z.terms.reserve(static_cast<std::size_t>(levels));
  double total = 0.0, carry = 0.0;
  for (int n = 1; n <= levels; ++n) {
    const auto lc = detail::log_binomials(n);
    const double log_len = -n * ln3;
    double w = 0.0, wc = 0.0;
    long double hits = 0.0L;
    for (int j = 0; j <= n; ++j) {
      const double log_mu = j * lp + (n - j) * lq;
      const double v = log_mu - alpha * log_len;
      if (v < la || v > lb) continue;
      const double term = std::exp(lc[static_cast<std::size_t>(j)] + sigma * log_len);
      // Neumaier summation
      const double t = w + term;
      wc += std::abs(w) >= std::abs(term) ? (w - t) + term : (term - t) + w;
      w = t;
      hits += std::exp(static_cast<long double>(lc[static_cast<std::size_t>(j)]));
    }
    w += wc;
    z.terms.push_back(w);
    z.hits.push_back(std::round(hits));
    const double t = total + w;
    carry += std::abs(total) >= std::abs(w) ? (total - t) + w : (w - t) + total;
    total = t;
  }
  z.sum = total + carry;
  return z;
}

inline double bernoulli_cantor_zeta(double p, double alpha, double a, double b, double sigma, int levels) {
  return bernoulli_cantor_levels(p, alpha, a, b, sigma, levels).sum;
}

/// T(q) = ln(p^q + (1-p)^q) / ln 3
inline double bernoulli_tau(double p, double q) {
  detail::check_p(p);
  return std::log(std::pow(p, q) + std::pow(1.0 - p, q)) / std::log(3.0);
}

/// T'(q)
inline double bernoulli_tau_slope(double p, double q) {
  detail::check_p(p);
  const double a = std::pow(p, q), b = std::pow(1.0 - p, q);
  return (a * std::log(p) + b * std::log(1.0 - p)) / ((a + b) * std::log(3.0));
}

struct BernoulliSpectrum {
  double xi = 0.0;
  double delta = 0.0;
  bool degenerate = false;  // p = 1/2: T is linear, only alpha = dimension is attained
};

/// xi_alpha solves T'(xi) = -alpha (bisection); delta_alpha = T(xi) + alpha xi.
inline BernoulliSpectrum bernoulli_spectrum(double p, double alpha) {
  detail::check_p(p);
  const double ln3 = std::log(3.0);
  const double e1 = -std::log(p) / ln3, e2 = -std::log(1.0 - p) / ln3;
  const double lo_end = std::min(e1, e2), hi_end = std::max(e1, e2);
  if (hi_end - lo_end < 1e-14) {
    if (std::abs(alpha - lo_end) > 1e-12) fail(ErrorKind::AlphaOutOfRange, "p = 1/2 only attains alpha = ln2/ln3");
    return {0.0, cantor_dimension(), true};
  }
  if (!(alpha > lo_end && alpha < hi_end)) {
    fail(ErrorKind::AlphaOutOfRange, "alpha " + std::to_string(alpha) + " outside (" + std::to_string(lo_end) + ", " +
                                         std::to_string(hi_end) + ")");
  }
  auto g = [&](double xi) { return bernoulli_tau_slope(p, xi) + alpha; };  // increasing in xi
  double lo = -1.0, hi = 1.0;
  while (g(lo) > 0.0) lo *= 2.0;
  while (g(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  BernoulliSpectrum s;
  s.xi = 0.5 * (lo + hi);
  s.delta = bernoulli_tau(p, s.xi) + alpha * s.xi;
  return s;
}

/// Closed form of the p = 1/2, alpha = ln2/ln3 zeta function: 2 3^-s / (1 - 2 3^-s).
inline double halfhalf_zeta_closed(double sigma) {
  if (!(sigma > cantor_dimension())) fail(ErrorKind::AtOrBelowAbscissa, "sigma must exceed ln2/ln3");
  const double r = 2.0 * std::pow(3.0, -sigma);
  return r / (1.0 - r);
}

struct BernoulliVariance {
  double variance = 0.0;
  double omega = 0.0;  // 1 / sqrt(2 ln3 variance)
};

/// Variance of ln p_i + alpha ln3 under the Bernoulli measure q_i ~ p_i^xi_alpha.
inline BernoulliVariance bernoulli_variance(double p, double alpha) {
  const auto s = bernoulli_spectrum(p, alpha);
  const double ln3 = std::log(3.0);
  if (s.degenerate) fail(ErrorKind::DegenerateVariance, "psi - alpha phi is a coboundary");
  const double a = std::pow(p, s.xi), b = std::pow(1.0 - p, s.xi);
  const double q1 = a / (a + b), q2 = b / (a + b);
  const double u1 = std::log(p) + alpha * ln3, u2 = std::log(1.0 - p) + alpha * ln3;
  const double mean = q1 * u1 + q2 * u2;
  const double var = q1 * (u1 - mean) * (u1 - mean) + q2 * (u2 - mean) * (u2 - mean);
  if (!(var > 1e-14)) fail(ErrorKind::DegenerateVariance, "zero variance");
  return {var, 1.0 / std::sqrt(2.0 * ln3 * var)};
}

}  // namespace cookiezeta::oracle
