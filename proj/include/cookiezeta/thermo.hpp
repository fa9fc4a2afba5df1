#pragma once

// Transfer operator on depth-m cylinders, pressure, Gibbs measures.
//
// Functions constant on m-cylinders are vectors indexed by the lexicographic
// rank of the m-word. The Ruelle operator acts as
//
//   (L w)(u) = sum_i exp(psi(x_v)) w(v),   v = (i, u_1, ..., u_{m-1}),
//
// with x_v the periodic point of v. Only the k^m column weights are stored.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cookiezeta/dynamics.hpp"
#include "cookiezeta/error.hpp"
#include "cookiezeta/numeric.hpp"
#include "cookiezeta/potential.hpp"

namespace cookiezeta::thermo {

/// Largest supported transfer-matrix dimension (2^12 states).
inline constexpr std::uint64_t max_states = 4096;
inline constexpr double power_tolerance = 1e-13;
inline constexpr int power_max_iterations = 100000;

inline int max_depth(int k) {
  int m = 0;
  std::uint64_t states = 1;
  while (states * static_cast<std::uint64_t>(k) <= max_states) {
    states *= static_cast<std::uint64_t>(k);
    ++m;
  }
  return m;
}

/// Periodic representatives of the depth-m cylinders, in lexicographic order.
class CylinderGrid {
 public:
  CylinderGrid(const CookieCutterMap& map, int depth) : map_(&map), k_(map.k()), depth_(depth) {
    if (depth < 1) fail(ErrorKind::InvalidArgument, "depth must be at least 1");
    if (depth > max_depth(k_)) {
      fail(ErrorKind::DepthTooLarge, "depth " + std::to_string(depth) + " exceeds " + std::to_string(max_depth(k_)));
    }
    const auto n = numeric::ipow(static_cast<std::uint64_t>(k_), depth);
    points_.reserve(n);
    symbols_.reserve(n);
    dynamics::for_each_cylinder_at(map, depth, [&](const Cylinder& c) {
      points_.push_back(c.rep_point());
      symbols_.push_back(c.word[0]);
    });
  }

  const CookieCutterMap& map() const noexcept { return *map_; }
  int k() const noexcept { return k_; }
  int depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::span<const double> points() const noexcept { return points_; }

  /// psi(x_v) for every state v.
  std::vector<double> sample(const Potential& psi) const {
    psi.validate(*map_);
    std::vector<double> out(points_.size());
    for (std::size_t v = 0; v < points_.size(); ++v) out[v] = psi.value(*map_, points_[v], symbols_[v]);
    return out;
  }

 private:
  const CookieCutterMap* map_;
  int k_;
  int depth_;
  std::vector<double> points_;
  std::vector<std::uint8_t> symbols_;
};

class TransferMatrix {
 public:
  TransferMatrix(int k, int depth, std::vector<double> log_weights)
      : k_(k), depth_(depth), log_weights_(std::move(log_weights)) {
    if (log_weights_.size() != numeric::ipow(static_cast<std::uint64_t>(k), depth)) {
      fail(ErrorKind::InvalidArgument, "transfer matrix needs k^m column weights");
    }
    shift_ = *std::max_element(log_weights_.begin(), log_weights_.end());
    if (!std::isfinite(shift_)) fail(ErrorKind::InvalidArgument, "non-finite potential sample");
    weights_.resize(log_weights_.size());
    for (std::size_t v = 0; v < weights_.size(); ++v) weights_[v] = std::exp(log_weights_[v] - shift_);
    tail_ = numeric::ipow(static_cast<std::uint64_t>(k), depth - 1);
  }

  int k() const noexcept { return k_; }
  int depth() const noexcept { return depth_; }
  std::size_t dimension() const noexcept { return weights_.size(); }
  std::span<const double> log_weights() const noexcept { return log_weights_; }
  /// Common factor exp(shift) removed from every entry before iterating.
  double shift() const noexcept { return shift_; }

  /// Entry (u, v): exp(psi(x_v)) when v = (i, u_1..u_{m-1}), otherwise 0.
  double entry(std::size_t u, std::size_t v) const noexcept {
    return (v % tail_) == (u / static_cast<std::size_t>(k_)) ? std::exp(log_weights_[v]) : 0.0;
  }

  /// out = A in / exp(shift)
  void apply(std::span<const double> in, std::span<double> out) const noexcept {
    const std::size_t kk = static_cast<std::size_t>(k_);
    for (std::size_t u = 0; u < weights_.size(); ++u) {
      const std::size_t base = u / kk;
      double s = 0.0;
      for (std::size_t i = 0; i < kk; ++i) {
        const std::size_t v = i * tail_ + base;
        s += weights_[v] * in[v];
      }
      out[u] = s;
    }
  }

  /// out = A^T in / exp(shift)
  void apply_transpose(std::span<const double> in, std::span<double> out) const noexcept {
    const std::size_t kk = static_cast<std::size_t>(k_);
    for (std::size_t v = 0; v < weights_.size(); ++v) {
      const std::size_t base = (v % tail_) * kk;
      double s = 0.0;
      for (std::size_t j = 0; j < kk; ++j) s += in[base + j];
      out[v] = weights_[v] * s;
    }
  }

 private:
  int k_;
  int depth_;
  std::vector<double> log_weights_;
  std::vector<double> weights_;
  double shift_ = 0.0;
  std::size_t tail_ = 1;
};

inline TransferMatrix transfer_matrix(const CookieCutterMap& map, const Potential& psi, int depth) {
  CylinderGrid grid(map, depth);
  return TransferMatrix(map.k(), depth, grid.sample(psi));
}

struct EigenVector {
  double log_eigenvalue = 0.0;  // includes the matrix shift
  std::vector<double> vector;   // positive, max-normalized
  double residual = 0.0;        // ||A x - lambda x|| / (lambda ||x||), sup norm
  int iterations = 0;
};

namespace detail {

template <class Apply>
EigenVector power_iteration(const TransferMatrix& tm, Apply&& apply) {
  const std::size_t n = tm.dimension();
  std::vector<double> x(n, 1.0), y(n);
  double lambda = 0.0;
  EigenVector out;
  for (int it = 1; it <= power_max_iterations; ++it) {
    apply(x, y);
    double xy = 0.0, xx = 0.0, ymax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      xy += x[i] * y[i];
      xx += x[i] * x[i];
      ymax = std::max(ymax, y[i]);
    }
    const double rq = xy / xx;
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(y[i] - rq * x[i]));
    res /= rq;  // x is max-normalized
    const bool settled = it > 1 && std::abs(rq - lambda) <= power_tolerance * rq && res < power_tolerance;
    lambda = rq;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ymax;
    if (settled) {
      out.log_eigenvalue = std::log(lambda) + tm.shift();
      out.vector = std::move(x);
      out.residual = res;
      out.iterations = it;
      return out;
    }
  }
  fail(ErrorKind::NoConvergence, "power iteration did not converge");
}

}  // namespace detail

/// Right Perron vector h (L h = lambda h).
inline EigenVector right_eigenvector(const TransferMatrix& tm) {
  return detail::power_iteration(tm, [&](std::span<const double> in, std::span<double> out) { tm.apply(in, out); });
}

/// Left Perron vector nu (nu L = lambda nu).
inline EigenVector left_eigenvector(const TransferMatrix& tm) {
  return detail::power_iteration(
      tm, [&](std::span<const double> in, std::span<double> out) { tm.apply_transpose(in, out); });
}

struct PressureResult {
  double value = 0.0;
  int depth = 0;
  double eigenvalue = 0.0;
  double residual = 0.0;
  int iterations = 0;
  /// |P_m - P_{m-1}|, or NaN at depth 1.
  double truncation_error = std::numeric_limits<double>::quiet_NaN();
};

/// log of the leading eigenvalue for the given column log-weights.
inline double log_pressure(int k, int depth, std::vector<double> log_weights) {
  return right_eigenvector(TransferMatrix(k, depth, std::move(log_weights))).log_eigenvalue;
}

inline PressureResult pressure(const CookieCutterMap& map, const Potential& psi, int depth) {
  const auto ev = right_eigenvector(transfer_matrix(map, psi, depth));
  PressureResult r;
  r.value = ev.log_eigenvalue;
  r.depth = depth;
  r.eigenvalue = std::exp(ev.log_eigenvalue);
  r.residual = ev.residual;
  r.iterations = ev.iterations;
  if (depth > 1) {
    r.truncation_error = std::abs(r.value - right_eigenvector(transfer_matrix(map, psi, depth - 1)).log_eigenvalue);
  }
  return r;
}

/// psi - P(psi).
inline Potential normalize(const CookieCutterMap& map, const Potential& psi, int depth) {
  const double p = pressure(map, psi, depth).value;
  Potential out = psi - p;
  const double check = pressure(map, out, depth).value;
  if (std::abs(check) >= 1e-10) {
    fail(ErrorKind::NoConvergence, "normalized pressure " + std::to_string(check) + " is not zero");
  }
  return out;
}

/// Root t of P(t * phi + base) = 0, where phi_v and base_v are the state
/// samples of phi and of the base potential. P is strictly decreasing in t
/// with slope between log inf|g'| and log sup|g'|, which gives the bracket.
inline double pressure_root(const CookieCutterMap& map, int depth, std::span<const double> phi,
                            std::span<const double> base, double tol = 1e-14) {
  const int k = map.k();
  auto eval = [&](double t) {
    std::vector<double> w(phi.size());
    for (std::size_t v = 0; v < w.size(); ++v) w[v] = t * phi[v] + base[v];
    return log_pressure(k, depth, std::move(w));
  };
  const double steep = -std::log(map.inf_derivative());
  const double shallow = -std::log(map.sup_derivative());
  const double f0 = eval(0.0);
  if (f0 == 0.0) return 0.0;
  double lo = f0 > 0.0 ? f0 / steep : f0 / shallow;
  double hi = f0 > 0.0 ? f0 / shallow : f0 / steep;
  const double pad = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
  lo -= pad;
  hi += pad;
  double flo = eval(lo), fhi = eval(hi);
  for (int grow = 0; grow < 60 && (flo > 0.0) == (fhi > 0.0); ++grow) {
    const double w = hi - lo;
    if (flo < 0.0) {
      lo -= w;
      flo = eval(lo);
    } else {
      hi += w;
      fhi = eval(hi);
    }
  }
  return numeric::find_root(eval, lo, hi, flo, fhi, tol);
}

/// Hausdorff dimension of the repeller: the root of P(-s log|T'|) = 0.
inline double solve_bowen(const CookieCutterMap& map, int depth) {
  CylinderGrid grid(map, depth);
  const auto phi = grid.sample(Potential::log_derivative());
  std::vector<double> zero(phi.size(), 0.0);
  if (log_pressure(map.k(), depth, zero) <= 0.0) fail(ErrorKind::BracketFailure, "P(0) <= 0");
  return pressure_root(map, depth, phi, zero, 1e-14);
}

/// Stationary Markov measure of the depth-m chain: the discrete Gibbs
/// measure of psi. State weights are nu(v) h(v); a word is extended on the
/// left by symbol i with probability exp(psi(x_v)) h(v) / (lambda h(u)).
class GibbsChain {
 public:
  GibbsChain(const CookieCutterMap& map, const Potential& psi, int depth) : GibbsChain(CylinderGrid(map, depth), psi) {}

  GibbsChain(const CylinderGrid& grid, const Potential& psi)
      : GibbsChain(grid, grid.sample(psi)) {}

  GibbsChain(const CylinderGrid& grid, std::vector<double> log_weights)
      : k_(grid.k()), depth_(grid.depth()), points_(grid.points().begin(), grid.points().end()) {
    TransferMatrix tm(k_, depth_, std::move(log_weights));
    const auto right = right_eigenvector(tm);
    const auto left = left_eigenvector(tm);
    log_lambda_ = right.log_eigenvalue;
    residual_ = std::max(right.residual, left.residual);
    log_w_.assign(tm.log_weights().begin(), tm.log_weights().end());
    const std::size_t n = tm.dimension();
    log_h_.resize(n);
    std::vector<double> mu(n);
    numeric::CompensatedSum total;
    for (std::size_t v = 0; v < n; ++v) {
      log_h_[v] = std::log(right.vector[v]);
      mu[v] = left.vector[v] * right.vector[v];
      total.add(mu[v]);
    }
    const double z = total.value();
    state_mu_.resize(n);
    log_mu_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      state_mu_[v] = mu[v] / z;
      log_mu_[v] = std::log(state_mu_[v]);
    }
    // marginals on shorter words: sum over trailing symbols
    marginals_.resize(static_cast<std::size_t>(depth_));
    for (int d = 1; d < depth_; ++d) {
      const std::size_t block = numeric::ipow(static_cast<std::uint64_t>(k_), depth_ - d);
      auto& m = marginals_[static_cast<std::size_t>(d)];
      m.resize(n / block);
      for (std::size_t w = 0; w < m.size(); ++w) {
        numeric::CompensatedSum s;
        for (std::size_t j = 0; j < block; ++j) s.add(state_mu_[w * block + j]);
        m[w] = std::log(s.value());
      }
    }
    states_ = n;
  }

  int k() const noexcept { return k_; }
  int depth() const noexcept { return depth_; }
  double log_eigenvalue() const noexcept { return log_lambda_; }
  double pressure() const noexcept { return log_lambda_; }
  double residual() const noexcept { return residual_; }
  std::span<const double> state_measure() const noexcept { return state_mu_; }
  std::span<const double> state_points() const noexcept { return points_; }

  /// log mu of the depth-m state v.
  double log_state_measure(std::size_t v) const noexcept { return log_mu_[v]; }
  /// log mu of a word of length d < depth, by lexicographic index.
  double log_marginal(int d, std::uint64_t index) const noexcept {
    return marginals_[static_cast<std::size_t>(d)][index];
  }
  /// log of the probability of extending state u on the left to state v.
  double log_transition(std::size_t u, std::size_t v) const noexcept {
    return log_w_[v] + log_h_[v] - log_lambda_ - log_h_[u];
  }
  std::size_t states() const noexcept { return states_; }

  /// sum_v mu(v) f(x_v): the derivative of the discrete pressure along f.
  double integrate(std::span<const double> samples) const {
    numeric::CompensatedSum s;
    for (std::size_t v = 0; v < states_; ++v) s.add(state_mu_[v] * samples[v]);
    return s.value();
  }

 private:
  int k_;
  int depth_;
  std::vector<double> points_;
  double log_lambda_ = 0.0;
  double residual_ = 0.0;
  std::vector<double> log_w_, log_h_, log_mu_, state_mu_;
  std::vector<std::vector<double>> marginals_;
  std::size_t states_ = 0;
};

/// Cylinder log-weights under a GibbsChain, fed in preorder from
/// dynamics::walk_cylinders. Ancestors must be visited (or primed) first.
class GibbsTracker {
 public:
  GibbsTracker(const GibbsChain& chain, int max_level)
      : chain_(&chain), prefix_(static_cast<std::size_t>(max_level + 2), 0.0) {
    modulus_ = numeric::ipow(static_cast<std::uint64_t>(chain.k()), chain.depth());
  }

  /// Seeds the prefix products for a walk that starts below `root`.
  void prime(std::span<const std::uint8_t> root) {
    std::uint64_t index = 0;
    const auto k = static_cast<std::uint64_t>(chain_->k());
    for (std::size_t d = 1; d <= root.size(); ++d) {
      index = index * k + root[d - 1];
      step(static_cast<int>(d), index);
    }
  }

  double log_weight(const Cylinder& c) { return step(c.level, c.index); }

 private:
  double step(int d, std::uint64_t index) {
    const int m = chain_->depth();
    if (d < m) {
      prefix_[static_cast<std::size_t>(d)] = 0.0;
      return chain_->log_marginal(d, index);
    }
    const std::size_t u = index % modulus_;
    if (d == m) {
      prefix_[static_cast<std::size_t>(d)] = 0.0;
      return chain_->log_state_measure(u);
    }
    const std::size_t v = (index / static_cast<std::uint64_t>(chain_->k())) % modulus_;
    const double p = prefix_[static_cast<std::size_t>(d - 1)] + chain_->log_transition(u, v);
    prefix_[static_cast<std::size_t>(d)] = p;
    return p + chain_->log_state_measure(u);
  }

  const GibbsChain* chain_;
  std::vector<double> prefix_;
  std::uint64_t modulus_ = 1;
};

struct GibbsApproximation {
  int level = 0;
  int depth = 0;
  std::vector<double> weights;  // by lexicographic word index
  double normalization_defect = 0.0;
  double ratio_lower = 0.0;  // empirical C: min mu(I_w) / exp(psi^n(x_w) - nP)
  double ratio_upper = 0.0;  // empirical D
  double pressure = 0.0;
};

inline void require_normalized(double p, const char* what) {
  if (std::abs(p) > 1e-8) {
    fail(ErrorKind::NotNormalized, std::string(what) + " requires P(psi) = 0, got " + std::to_string(p));
  }
}

/// Level-n cylinder weights of the Gibbs measure of a normalized potential.
inline GibbsApproximation gibbs_weights(const CookieCutterMap& map, const Potential& psi, int level, int depth) {
  dynamics::check_level(map, level);
  GibbsChain chain(map, psi, depth);
  require_normalized(chain.pressure(), "gibbs_weights");
  GibbsApproximation g;
  g.level = level;
  g.depth = depth;
  g.pressure = chain.pressure();
  g.weights.assign(numeric::ipow(static_cast<std::uint64_t>(map.k()), level), 0.0);
  GibbsTracker tracker(chain, level);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  numeric::CompensatedSum total;
  dynamics::walk_cylinders(map, level, [&](const Cylinder& c) {
    const double lw = tracker.log_weight(c);
    if (c.level == level) {
      g.weights[c.index] = std::exp(lw);
      total.add(g.weights[c.index]);
      const double ratio = lw - (psi.birkhoff_at_rep(c) - level * g.pressure);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    return true;
  });
  g.normalization_defect = std::abs(total.value() - 1.0);
  g.ratio_lower = std::exp(lo);
  g.ratio_upper = std::exp(hi);
  return g;
}

/// sum_w mu(I_w) f(x_w) over the level of `gibbs`.
inline double measure_integral(const CookieCutterMap& map, const GibbsApproximation& gibbs, const Potential& f,
                               int level) {
  if (level != gibbs.level) fail(ErrorKind::InvalidArgument, "integration level differs from the Gibbs level");
  f.validate(map);
  numeric::CompensatedSum s;
  dynamics::for_each_cylinder_at(map, level, [&](const Cylinder& c) {
    s.add(gibbs.weights[c.index] * f.value(map, c.rep_point(), c.word[0]));
  });
  return s.value();
}

/// sigma^2 = d^2/dt^2 P(base + t * observable) at t = 0 by a central second
/// difference. The observable must integrate to zero against mu_base.
inline double asymptotic_variance(const CookieCutterMap& map, const Potential& base, const Potential& observable,
                                  int depth, double step = 1e-4) {
  CylinderGrid grid(map, depth);
  const auto b = grid.sample(base);
  const auto f = grid.sample(observable);
  GibbsChain chain(grid, b);
  const double mean = chain.integrate(f);
  if (std::abs(mean) > 1e-6) {
    fail(ErrorKind::NonCenteredObservable, "observable has mean " + std::to_string(mean));
  }
  auto p = [&](double t) {
    std::vector<double> w(b.size());
    for (std::size_t v = 0; v < w.size(); ++v) w[v] = b[v] + t * f[v];
    return log_pressure(map.k(), depth, std::move(w));
  };
  return (p(step) - 2.0 * p(0.0) + p(-step)) / (step * step);
}

/// Per level n = 1..N, max over level-n cylinders of |psi^n(g_w(0)) - psi^n(g_w(1))|.
inline std::vector<double> distortion_profile(const CookieCutterMap& map, const Potential& psi, int levels) {
  dynamics::check_level(map, levels);
  psi.validate(map);
  std::vector<double> out(static_cast<std::size_t>(levels), 0.0);
  dynamics::walk_cylinders(map, levels, [&](const Cylinder& c) {
    auto& slot = out[static_cast<std::size_t>(c.level - 1)];
    slot = std::max(slot, std::abs(psi.birkhoff(c, 0.0) - psi.birkhoff(c, 1.0)));
    return true;
  });
  return out;
}

/// Empirical lower bound for the distortion constant K_psi over levels <= N.
inline double distortion_constant(const CookieCutterMap& map, const Potential& psi, int levels) {
  const auto p = distortion_profile(map, psi, levels);
  return *std::max_element(p.begin(), p.end());
}

struct PeriodicExtremes {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  Word min_word;
  Word max_word;
  std::size_t orbits = 0;
};

inline constexpr int max_period = 14;

/// Extremes of value(cylinder) over one periodic word per cyclic class of
/// period <= N.
template <class Value>
PeriodicExtremes periodic_extremes(const CookieCutterMap& map, int max_length, Value&& value) {
  if (max_length < 1 || max_length > max_period) {
    fail(ErrorKind::LevelTooLarge, "periodic enumeration is limited to periods 1.." + std::to_string(max_period));
  }
  PeriodicExtremes e;
  dynamics::for_each_necklace(map.k(), max_length, [&](std::span<const std::uint8_t> w) {
    Word word(std::vector<std::uint8_t>(w.begin(), w.end()));
    dynamics::WordCylinder cyl(map, word);
    const double x = value(cyl.get());
    ++e.orbits;
    // ties go to the first (shortest) word; repeats of a shorter word only
    // differ by rounding
    const double tie = 1e-13 * (1.0 + std::abs(x));
    if (x < e.min - tie) {
      e.min = x;
      e.min_word = word;
    }
    if (x > e.max + tie) {
      e.max = x;
      e.max_word = word;
    }
  });
  return e;
}

struct LivsicReport {
  double max_abs = 0.0;
  double min_signed = 0.0;
  double max_signed = 0.0;
  Word min_word;
  Word max_word;
  std::size_t orbits = 0;
};

/// Periodic averages f^n(x)/n over orbits of period <= N. max_abs below a
/// tolerance certifies f as numerically cohomologous to zero up to period N.
inline LivsicReport livsic_discrepancy(const CookieCutterMap& map, const Potential& f, int max_length) {
  f.validate(map);
  const auto e = periodic_extremes(map, max_length, [&](const Cylinder& c) { return f.birkhoff_at_rep(c) / c.level; });
  LivsicReport r;
  r.min_signed = e.min;
  r.max_signed = e.max;
  r.max_abs = std::max(std::abs(e.min), std::abs(e.max));
  r.min_word = e.min_word;
  r.max_word = e.max_word;
  r.orbits = e.orbits;
  return r;
}

}  // namespace cookiezeta::thermo
