#pragma once

// Regularity, the intervals I_alpha, delta_alpha(xi), xi_alpha and tau(q).
//
// Convention: T(q) is the root of P(T phi + q psi) = 0, and
// delta_alpha(xi) = T(xi) + alpha xi. The spectrum is min over xi of
// delta_alpha(xi). tau_partition follows the box-counting definition
// log S_eps(q) / log eps, which equals -T(q) on the fixtures we test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cookiezeta/dynamics.hpp"
#include "cookiezeta/error.hpp"
#include "cookiezeta/numeric.hpp"
#include "cookiezeta/potential.hpp"
#include "cookiezeta/thermo.hpp"

namespace cookiezeta::multifractal {

/// log mu(I) / log |I|
inline double regularity(const dynamics::BasicInterval& interval, double weight) {
  if (!(weight > 0.0)) fail(ErrorKind::ZeroMeasureInterval, "interval " + interval.word.to_string() + " has no mass");
  if (!(interval.length > 0.0 && interval.length < 1.0)) {
    fail(ErrorKind::InvalidArgument, "regularity needs 0 < |I| < 1");
  }
  return std::log(weight) / std::log(interval.length);
}

/// Longest period used for periodic-orbit extremes: k^N <= 2^14.
inline int default_period(int k) {
  int n = 0;
  std::uint64_t c = 1;
  while (c * static_cast<std::uint64_t>(k) <= (std::uint64_t{1} << 14) && n < thermo::max_period) {
    c *= static_cast<std::uint64_t>(k);
    ++n;
  }
  return n;
}

struct AlphaInterval {
  double alpha = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool contains_zero_strictly = false;
  Word lo_word;
  Word hi_word;
};

/// Below this, an endpoint of I_alpha is treated as touching zero.
inline constexpr double zero_tolerance = 1e-12;

/// Periodic-orbit inner approximation of I_alpha = { int (psi - alpha phi) dmu }.
inline AlphaInterval i_alpha(const CookieCutterMap& map, const Potential& psi, double alpha, int max_period) {
  const Potential f = psi - alpha * Potential::log_derivative();
  f.validate(map);
  const auto e = thermo::periodic_extremes(map, max_period, [&](const Cylinder& c) { return f.birkhoff_at_rep(c) / c.level; });
  AlphaInterval r;
  r.alpha = alpha;
  r.lo = e.min;
  r.hi = e.max;
  r.lo_word = e.min_word;
  r.hi_word = e.max_word;
  r.contains_zero_strictly = r.lo < -zero_tolerance && r.hi > zero_tolerance;
  return r;
}

struct AlphaRange {
  double min = 0.0;
  double max = 0.0;
  Word min_word;
  Word max_word;
};

/// Extremes of psi^n / phi^n over periodic orbits: alpha is in R iff it lies in this range.
inline AlphaRange alpha_range(const CookieCutterMap& map, const Potential& psi, int max_period) {
  psi.validate(map);
  const auto phi = Potential::log_derivative();
  const auto e = thermo::periodic_extremes(
      map, max_period, [&](const Cylinder& c) { return psi.birkhoff_at_rep(c) / phi.birkhoff_at_rep(c); });
  return {e.min, e.max, e.min_word, e.max_word};
}

/// Depth-m samples of psi and phi, reused across the many pressure roots a
/// spectrum computation needs.
class SpectrumSolver {
 public:
  SpectrumSolver(const CookieCutterMap& map, const Potential& psi, int depth)
      : map_(&map), grid_(map, depth), phi_(grid_.sample(Potential::log_derivative())), psi_(grid_.sample(psi)) {}

  int depth() const noexcept { return grid_.depth(); }

  /// Root delta of P(delta phi + xi (psi - alpha phi)) = 0.
  double delta(double alpha, double xi) const {
    return thermo::pressure_root(*map_, grid_.depth(), phi_, base(alpha, xi), root_tolerance);
  }

  /// d delta_alpha / d xi = -int (psi - alpha phi) dmu / int phi dmu, where mu
  /// is the equilibrium state of delta phi + xi (psi - alpha phi).
  double slope(double alpha, double xi, double delta) const {
    auto w = base(alpha, xi);
    std::vector<double> f(w.size());
    for (std::size_t v = 0; v < w.size(); ++v) {
      w[v] += delta * phi_[v];
      f[v] = psi_[v] - alpha * phi_[v];
    }
    thermo::GibbsChain chain(grid_, std::move(w));
    return -chain.integrate(f) / chain.integrate(phi_);
  }

  /// Root T of P(T phi + q psi) = 0.
  double tau(double q) const {
    std::vector<double> b(psi_.size());
    for (std::size_t v = 0; v < b.size(); ++v) b[v] = q * psi_[v];
    return thermo::pressure_root(*map_, grid_.depth(), phi_, b, root_tolerance);
  }

  double pressure_of_psi() const { return thermo::log_pressure(grid_.k(), grid_.depth(), psi_); }

  static constexpr double root_tolerance = 1e-14;

 private:
  std::vector<double> base(double alpha, double xi) const {
    std::vector<double> b(psi_.size());
    for (std::size_t v = 0; v < b.size(); ++v) b[v] = xi * (psi_[v] - alpha * phi_[v]);
    return b;
  }

  const CookieCutterMap* map_;
  thermo::CylinderGrid grid_;
  std::vector<double> phi_;
  std::vector<double> psi_;
};

inline double delta_alpha_of_xi(const CookieCutterMap& map, const Potential& psi, double alpha, double xi, int depth) {
  return SpectrumSolver(map, psi, depth).delta(alpha, xi);
}

struct SpectrumPoint {
  double alpha = 0.0;
  double xi = 0.0;
  double delta = 0.0;
  double derivative = 0.0;  // central difference of delta_alpha at xi, h = 1e-5
  int iterations = 0;       // delta evaluations
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

inline constexpr double criticality_tolerance = 1e-8;

namespace detail {

inline SpectrumPoint minimize_delta(const SpectrumSolver& solver, double alpha) {
  SpectrumPoint pt;
  pt.alpha = alpha;
  int evals = 0;
  auto delta = [&](double xi) {
    ++evals;
    return solver.delta(alpha, xi);
  };
  auto slope = [&](double xi) { return solver.slope(alpha, xi, delta(xi)); };

  // bracket the minimum by doubling steps downhill
  double lo = -1.0, hi = 1.0;
  double s_lo = slope(lo), s_hi = slope(hi);
  for (int grow = 0; grow < 40 && !(s_lo <= 0.0 && s_hi >= 0.0); ++grow) {
    if (s_lo > 0.0) {
      hi = lo;
      s_hi = s_lo;
      lo *= 2.0;
      s_lo = slope(lo);
    } else {
      lo = hi;
      s_lo = s_hi;
      hi *= 2.0;
      s_hi = slope(hi);
    }
  }
  if (!(s_lo <= 0.0 && s_hi >= 0.0)) fail(ErrorKind::BracketFailure, "could not bracket xi_alpha");
  pt.bracket_lo = lo;
  pt.bracket_hi = hi;

  // coarse minimizer, then the root of the exact discrete derivative
  const auto [x0, f0] = numeric::minimize(delta, lo, hi, 40);
  (void)f0;
  double a = x0, b = x0;
  double sa = slope(a), sb = sa;
  double step = 1e-6 * (1.0 + std::abs(x0));
  if (sa == 0.0) {
    pt.xi = x0;
  } else {
    for (int grow = 0; grow < 60 && (sa > 0.0) == (sb > 0.0); ++grow) {
      if (sa > 0.0) {
        a = std::max(lo, a - step);
        sa = slope(a);
      } else {
        b = std::min(hi, b + step);
        sb = slope(b);
      }
      step *= 2.0;
    }
    pt.xi = numeric::find_root(slope, a, b, sa, sb, 1e-15 * (1.0 + std::abs(x0)));
  }
  pt.delta = delta(pt.xi);
  constexpr double h = 1e-5;
  pt.derivative = (delta(pt.xi + h) - delta(pt.xi - h)) / (2.0 * h);
  pt.iterations = evals;
  return pt;
}

}  // namespace detail

/// The critical xi_alpha and delta_alpha = delta_alpha(xi_alpha).
inline SpectrumPoint xi_alpha(const CookieCutterMap& map, const Potential& psi, double alpha, int depth,
                              const SpectrumSolver* solver = nullptr) {
  const int period = default_period(map.k());
  const auto f = psi - alpha * Potential::log_derivative();
  if (thermo::livsic_discrepancy(map, f, period).max_abs < 1e-10) {
    fail(ErrorKind::ConditionAViolated, "psi - alpha phi is cohomologous to zero");
  }
  const auto interval = i_alpha(map, psi, alpha, period);
  if (!interval.contains_zero_strictly) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "0 is not interior to I_alpha = [%.6g, %.6g] at alpha = %.6g", interval.lo,
                  interval.hi, alpha);
    fail(ErrorKind::ZeroNotInterior, buf);
  }
  std::optional<SpectrumSolver> own;
  if (!solver) solver = &own.emplace(map, psi, depth);
  auto pt = detail::minimize_delta(*solver, alpha);
  if (std::abs(pt.derivative) >= criticality_tolerance) {
    fail(ErrorKind::NoConvergence, "xi_alpha is not critical: derivative " + std::to_string(pt.derivative));
  }
  return pt;
}

/// T(q): the root of P(T phi + q psi) = 0 for normalized psi.
inline double tau_pressure(const CookieCutterMap& map, const Potential& psi, double q, int depth) {
  SpectrumSolver solver(map, psi, depth);
  thermo::require_normalized(solver.pressure_of_psi(), "tau_pressure");
  return solver.tau(q);
}

struct TauPartition {
  double value = 0.0;                // extrapolated to 1/n -> 0
  std::vector<int> levels;
  std::vector<double> estimates;     // log S_eps(q) / log eps per level
};

/// Overlaps below this fraction of a cylinder's length, or below the
/// absolute floor (endpoint rounding after ~20 compositions), are not
/// counted as hitting a grid cell.
inline constexpr double sliver_fraction = 1e-9;
inline constexpr double sliver_floor = 1e-12;

/// log S_eps(q) / log eps for a uniform grid of mesh eps = max level-n
/// cylinder length, S_eps(q) = sum over charged cells of mu(cell)^q.
inline double partition_estimate(const CookieCutterMap& map, const Potential& psi, double q, int level, int depth) {
  const auto gibbs = thermo::gibbs_weights(map, psi, level, std::min(depth, std::min(level, thermo::max_depth(map.k()))));
  double mesh = 0.0;
  dynamics::for_each_cylinder_at(map, level, [&](const Cylinder& c) { mesh = std::max(mesh, c.length()); });
  std::vector<std::pair<std::int64_t, double>> cells;
  cells.reserve(gibbs.weights.size());
  dynamics::for_each_cylinder_at(map, level, [&](const Cylinder& c) {
    const double w = gibbs.weights[c.index];
    if (!(w > 0.0)) return;
    const double l = c.left(), r = c.right(), len = r - l;
    const auto first = static_cast<std::int64_t>(std::floor(l / mesh));
    const auto last = static_cast<std::int64_t>(std::floor(r / mesh));
    for (auto j = first; j <= last; ++j) {
      const double overlap = std::min(r, (j + 1) * mesh) - std::max(l, j * mesh);
      if (overlap > std::max(sliver_fraction * len, sliver_floor)) cells.emplace_back(j, w * overlap / len);
    }
  });
  std::stable_sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> terms;
  for (std::size_t i = 0; i < cells.size();) {
    numeric::CompensatedSum m;
    std::size_t j = i;
    for (; j < cells.size() && cells[j].first == cells[i].first; ++j) m.add(cells[j].second);
    terms.push_back(q * std::log(m.value()));
    i = j;
  }
  return numeric::log_sum_exp(terms) / std::log(mesh);
}

/// Box-counting tau(q) from the listed levels, Richardson-extrapolated in
/// 1/n over the last two.
inline TauPartition tau_partition(const CookieCutterMap& map, const Potential& psi, double q, std::span<const int> levels,
                                  int depth) {
  if (levels.empty()) fail(ErrorKind::InvalidArgument, "tau_partition needs at least one level");
  TauPartition r;
  for (int n : levels) {
    dynamics::check_level(map, n);
    r.levels.push_back(n);
    r.estimates.push_back(partition_estimate(map, psi, q, n, depth));
  }
  const std::size_t s = r.levels.size();
  if (s == 1) {
    r.value = r.estimates[0];
  } else {
    const double n1 = r.levels[s - 2], n2 = r.levels[s - 1];
    r.value = (n2 * r.estimates[s - 1] - n1 * r.estimates[s - 2]) / (n2 - n1);
  }
  return r;
}

struct TauCurve {
  std::vector<double> q;
  std::vector<double> pressure;   // T(q)
  std::vector<double> partition;  // box-counting tau(q)
  bool convex = true;
};

/// Discrete second differences of y over (possibly uneven) x, all >= -tol.
inline bool is_convex(std::span<const double> x, std::span<const double> y, double tol) {
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double left = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
    const double right = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    if (right - left < -tol) return false;
  }
  return true;
}

inline TauCurve tau_curve(const CookieCutterMap& map, const Potential& psi, std::span<const double> qs, int depth,
                          std::span<const int> levels, const Execution& exec = {}) {
  SpectrumSolver solver(map, psi, depth);
  thermo::require_normalized(solver.pressure_of_psi(), "tau_curve");
  TauCurve c;
  c.q.assign(qs.begin(), qs.end());
  c.pressure.resize(qs.size());
  c.partition.resize(qs.size());
  numeric::parallel_for(qs.size(), exec, [&](std::size_t i) {
    c.pressure[i] = solver.tau(qs[i]);
    c.partition[i] = levels.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : tau_partition(map, psi, qs[i], levels, depth).value;
  });
  c.convex = is_convex(c.q, c.pressure, 1e-8);
  return c;
}

struct SpectrumCurve {
  std::vector<double> alpha;
  std::vector<std::optional<SpectrumPoint>> points;
  std::vector<std::string> errors;  // empty where the point succeeded
  bool concave = true;
  double max_delta = -std::numeric_limits<double>::infinity();
  double argmax_alpha = std::numeric_limits<double>::quiet_NaN();
};

/// xi_alpha over a grid; failures are recorded per point.
inline SpectrumCurve spectrum_curve(const CookieCutterMap& map, const Potential& psi, std::span<const double> alphas,
                                    int depth, const Execution& exec = {}) {
  SpectrumSolver solver(map, psi, depth);
  SpectrumCurve c;
  c.alpha.assign(alphas.begin(), alphas.end());
  c.points.resize(alphas.size());
  c.errors.resize(alphas.size());
  numeric::parallel_for(alphas.size(), exec, [&](std::size_t i) {
    try {
      c.points[i] = xi_alpha(map, psi, alphas[i], depth, &solver);
    } catch (const Error& e) {
      c.errors[i] = e.what();
    }
  });
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!c.points[i]) continue;
    xs.push_back(alphas[i]);
    ys.push_back(-c.points[i]->delta);
    if (c.points[i]->delta > c.max_delta) {
      c.max_delta = c.points[i]->delta;
      c.argmax_alpha = alphas[i];
    }
  }
  c.concave = is_convex(xs, ys, 1e-8);
  return c;
}

}  // namespace cookiezeta::multifractal
