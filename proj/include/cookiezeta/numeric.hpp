#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "cookiezeta/error.hpp"

namespace cookiezeta {

/// Thread budget for the data-parallel sweeps. Work is always split into a
/// fixed set of chunks, so results do not depend on `threads`.
struct Execution {
  unsigned threads = 1;
};

namespace numeric {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// log(sum exp(x_i)), summed in the given order.
inline double log_sum_exp(std::span<const double> xs) noexcept {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(top)) return top;
  CompensatedSum s;
  for (double x : xs) s.add(std::exp(x - top));
  return top + std::log(s.value());
}

/// Root of a continuous f on [lo, hi] with f(lo), f(hi) of opposite sign.
/// Terminates when the bracket is narrower than `tol` (absolute).
template <class F>
double find_root(F&& f, double lo, double hi, double f_lo, double f_hi, double tol,
                 std::uintmax_t max_iter = 400) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    fail(ErrorKind::BracketFailure, "root not bracketed");
  }
  std::uintmax_t iters = max_iter;
  const auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, stop, iters);
  if (iters >= max_iter) fail(ErrorKind::NoConvergence, "root finder exhausted its iteration budget");
  return 0.5 * (a + b);
}

/// Minimizer of a unimodal f on [lo, hi] (golden section with parabolic steps).
template <class F>
std::pair<double, double> minimize(F&& f, double lo, double hi, int bits = 52,
                                   std::uintmax_t max_iter = 500) {
  std::uintmax_t iters = max_iter;
  return boost::math::tools::brent_find_minima(f, lo, hi, bits, iters);
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least-squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) fail(ErrorKind::InvalidArgument, "line fit needs at least two paired samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) fail(ErrorKind::InvalidArgument, "line fit with constant abscissa");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker; callers write into per-index slots so the output is independent of
/// the thread count.
template <class Body>
void parallel_for(std::size_t count, const Execution& exec, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, exec.threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace numeric
}  // namespace cookiezeta
