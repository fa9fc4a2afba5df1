#pragma once

// Multifractal zeta functions: sums of |I|^s over the basic intervals whose
// measure sits between a|I|^alpha and b|I|^alpha, the geometric zeta of the
// gap lengths, the g-zeta over periodic orbits, and the diagnostics built on
// top of them (abscissa, growth exponent, sandwich bounds).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cookiezeta/dynamics.hpp"
#include "cookiezeta/error.hpp"
#include "cookiezeta/numeric.hpp"
#include "cookiezeta/potential.hpp"
#include "cookiezeta/thermo.hpp"

namespace cookiezeta {

struct ZetaConfig {
  double alpha = 0.0;
  double a = 1.0;
  double b = 2.0;

  double log_a() const { return std::log(a); }
  double log_b() const { return std::log(b); }

  void validate() const {
    if (!std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "alpha must be finite");
    if (!(a > 0.0) || !std::isfinite(a)) fail(ErrorKind::InvalidArgument, "window constant a must be positive");
    if (!(b > a) || !std::isfinite(b)) fail(ErrorKind::InvalidArgument, "window constant b must exceed a");
  }

  /// ln a <= log_mu - alpha log_len <= ln b
  bool hit(double log_mu, double log_len) const {
    const double v = log_mu - alpha * log_len;
    return v >= log_a() && v <= log_b();
  }
};

enum class ZetaStrategy {
  automatic,       // symbol classes when they apply, enumeration otherwise
  enumerate,       // every word, Gibbs weights from the transfer chain
  symbol_classes,  // affine map + locally constant potential: group words by symbol counts
};

struct ZetaOptions {
  int depth = 10;  // Gibbs chain depth for enumeration
  ZetaStrategy strategy = ZetaStrategy::automatic;
  Execution exec{};
};

/// One group of equal words at a level: log|I|, log mu(I) and log of the
/// number of words it stands for (0 for a single word).
struct LevelEntry {
  double log_len = 0.0;
  double log_mu = 0.0;
  double log_mult = 0.0;
};

/// Per-level entries, levels 1..N, each in lexicographic word order.
struct LevelTable {
  std::vector<std::vector<LevelEntry>> levels;
  int size() const noexcept { return static_cast<int>(levels.size()); }
};

struct ZetaEvaluation {
  double sigma = 0.0;
  int levels = 0;
  std::vector<double> terms;  // w_n, n = 1..N
  std::vector<double> hits;   // hit counts (doubles: the class path runs past 2^64)
  double partial_sum = 0.0;
  double tail_ratio = std::numeric_limits<double>::quiet_NaN();
  double tail_estimate = std::numeric_limits<double>::quiet_NaN();
  double total() const { return partial_sum + tail_estimate; }
};

namespace zeta {

inline constexpr int max_class_levels = 5000;

/// Geometric extrapolation of the last terms: r = (w_N / w_{N-L})^{1/L} with
/// L even (so period-two oscillation cancels), tail = w_N r / (1 - r).
inline void attach_tail(ZetaEvaluation& z) {
  const int n = static_cast<int>(z.terms.size());
  if (n < 3) return;
  int lag = std::max(2, n / 4);
  if (lag % 2) --lag;
  lag = std::min(lag, n - 1 - ((n - 1) % 2));
  if (lag < 1) return;
  const double last = z.terms[static_cast<std::size_t>(n - 1)];
  const double earlier = z.terms[static_cast<std::size_t>(n - 1 - lag)];
  if (last == 0.0) {
    z.tail_ratio = 0.0;
    z.tail_estimate = 0.0;
    return;
  }
  if (earlier == 0.0) {
    z.tail_ratio = std::numeric_limits<double>::infinity();
    z.tail_estimate = std::numeric_limits<double>::infinity();
    return;
  }
  const double r = std::exp((std::log(last) - std::log(earlier)) / lag);
  z.tail_ratio = r;
  z.tail_estimate = r < 1.0 ? last * r / (1.0 - r) : std::numeric_limits<double>::infinity();
}

/// Builds an evaluation from precomputed level terms (used for oracle series too).
inline ZetaEvaluation from_terms(double sigma, std::vector<double> terms, std::vector<double> hits) {
  ZetaEvaluation z;
  z.sigma = sigma;
  z.levels = static_cast<int>(terms.size());
  z.terms = std::move(terms);
  z.hits = std::move(hits);
  z.partial_sum = numeric::compensated_sum(z.terms);
  attach_tail(z);
  return z;
}

namespace detail {

inline bool use_classes(const CookieCutterMap& map, const Potential& psi, ZetaStrategy s) {
  const bool eligible = map.is_affine() && psi.locally_constant_on(map);
  if (s == ZetaStrategy::symbol_classes && !eligible) {
    fail(ErrorKind::InvalidArgument, "symbol classes need an affine map and a locally constant potential");
  }
  return s == ZetaStrategy::symbol_classes || (s == ZetaStrategy::automatic && eligible);
}

struct ChunkPlan {
  int prefix = 0;
  std::size_t chunks = 0;
};

// Words are split by their first `prefix` symbols; slot 0 covers the shorter levels.
inline ChunkPlan plan_chunks(int k, int levels) {
  ChunkPlan p;
  std::uint64_t c = 1;
  while (p.prefix < levels && p.prefix < 8 && c * static_cast<std::uint64_t>(k) <= 256) {
    c *= static_cast<std::uint64_t>(k);
    ++p.prefix;
  }
  p.chunks = static_cast<std::size_t>(c);
  return p;
}

/// visit(slot, tracker, cylinder) over all words of length <= levels, each
/// slot walked independently. Slots are in lexicographic order.
template <class Visit>
void chunked_walk(const CookieCutterMap& map, const thermo::GibbsChain* chain, int levels, const Execution& exec,
                  Visit&& visit) {
  const auto plan = plan_chunks(map.k(), levels);
  numeric::parallel_for(plan.chunks + 1, exec, [&](std::size_t slot) {
    std::optional<thermo::GibbsTracker> tracker;
    if (chain) tracker.emplace(*chain, levels);
    if (slot == 0) {
      dynamics::walk_cylinders(map, plan.prefix - 1, [&](const Cylinder& c) {
        visit(slot, tracker, c);
        return true;
      });
      return;
    }
    const auto root = Word::from_index(slot - 1, plan.prefix, map.k());
    if (tracker) tracker->prime(root.symbols());
    dynamics::walk_cylinders(
        map, levels,
        [&](const Cylinder& c) {
          visit(slot, tracker, c);
          return true;
        },
        root);
  });
}

inline std::size_t slot_count(int k, int levels) { return plan_chunks(k, levels).chunks + 1; }

// Compositions of n into k parts, c0 ascending first.
template <class Visit>
void for_each_composition(int n, int k, std::vector<int>& c, int pos, int left, Visit&& visit) {
  if (pos == k - 1) {
    c[static_cast<std::size_t>(pos)] = left;
    visit(c);
    return;
  }
  for (int v = 0; v <= left; ++v) {
    c[static_cast<std::size_t>(pos)] = v;
    for_each_composition(n, k, c, pos + 1, left - v, visit);
  }
}

template <class Keep>
LevelTable class_table(const CookieCutterMap& map, const Potential& psi, int levels, const Execution& exec,
                       Keep&& keep) {
  if (levels > max_class_levels) fail(ErrorKind::LevelTooLarge, "symbol-class tables stop at 5000 levels");
  const int k = map.k();
  const auto values = psi.symbol_values(map);
  std::vector<double> log_r(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) log_r[static_cast<std::size_t>(i)] = map.branch(i).log_abs_det;
  numeric::CompensatedSum z;
  for (double v : values) z.add(std::exp(v));
  thermo::require_normalized(std::log(z.value()), "the zeta function");

  LevelTable t;
  t.levels.resize(static_cast<std::size_t>(levels));
  numeric::parallel_for(static_cast<std::size_t>(levels), exec, [&](std::size_t slot) {
    const int n = static_cast<int>(slot) + 1;
    const double top = std::lgamma(n + 1.0);
    std::vector<int> c(static_cast<std::size_t>(k), 0);
    auto& out = t.levels[slot];
    for_each_composition(n, k, c, 0, n, [&](const std::vector<int>& counts) {
      LevelEntry e;
      e.log_mult = top;
      for (int i = 0; i < k; ++i) {
        const int ci = counts[static_cast<std::size_t>(i)];
        e.log_mult -= std::lgamma(ci + 1.0);
        e.log_mu += ci * values[static_cast<std::size_t>(i)];
        e.log_len += ci * log_r[static_cast<std::size_t>(i)];
      }
      if (keep(e)) out.push_back(e);
    });
  });
  return t;
}

template <class Keep>
LevelTable word_table(const CookieCutterMap& map, const Potential& psi, int levels, const ZetaOptions& opt,
                      Keep&& keep) {
  dynamics::check_level(map, levels);
  thermo::GibbsChain chain(map, psi, opt.depth);
  thermo::require_normalized(chain.pressure(), "the zeta function");
  std::vector<LevelTable> parts(slot_count(map.k(), levels));
  for (auto& p : parts) p.levels.resize(static_cast<std::size_t>(levels));
  chunked_walk(map, &chain, levels, opt.exec, [&](std::size_t slot, auto& tracker, const Cylinder& c) {
    LevelEntry e;
    e.log_mu = tracker->log_weight(c);
    e.log_len = c.log_length();
    if (keep(e)) parts[slot].levels[static_cast<std::size_t>(c.level - 1)].push_back(e);
  });
  LevelTable t;
  t.levels.resize(static_cast<std::size_t>(levels));
  for (auto& p : parts) {
    for (std::size_t n = 0; n < p.levels.size(); ++n) {
      t.levels[n].insert(t.levels[n].end(), p.levels[n].begin(), p.levels[n].end());
    }
  }
  return t;
}

}  // namespace detail

/// All words of levels 1..N with their lengths and Gibbs weights.
inline LevelTable level_table(const CookieCutterMap& map, const Potential& psi, int levels,
                              const ZetaOptions& opt = {}) {
  if (levels < 1) fail(ErrorKind::InvalidArgument, "need at least one level");
  psi.validate(map);
  auto all = [](const LevelEntry&) { return true; };
  if (detail::use_classes(map, psi, opt.strategy)) return detail::class_table(map, psi, levels, opt.exec, all);
  return detail::word_table(map, psi, levels, opt, all);
}

/// The sandwich hits of a table.
inline LevelTable filter_hits(const LevelTable& table, const ZetaConfig& cfg) {
  cfg.validate();
  LevelTable t;
  t.levels.resize(table.levels.size());
  for (std::size_t n = 0; n < table.levels.size(); ++n) {
    for (const auto& e : table.levels[n]) {
      if (cfg.hit(e.log_mu, e.log_len)) t.levels[n].push_back(e);
    }
  }
  return t;
}

/// Sandwich hits built directly, without keeping the misses.
inline LevelTable hit_table(const CookieCutterMap& map, const Potential& psi, const ZetaConfig& cfg, int levels,
                            const ZetaOptions& opt = {}) {
  cfg.validate();
  if (levels < 1) fail(ErrorKind::InvalidArgument, "need at least one level");
  psi.validate(map);
  auto keep = [&](const LevelEntry& e) { return cfg.hit(e.log_mu, e.log_len); };
  if (detail::use_classes(map, psi, opt.strategy)) return detail::class_table(map, psi, levels, opt.exec, keep);
  return detail::word_table(map, psi, levels, opt, keep);
}

/// Sum of |I|^sigma over the hits of a table, level by level.
inline ZetaEvaluation evaluate(const LevelTable& hits, double sigma) {
  std::vector<double> terms, counts;
  terms.reserve(hits.levels.size());
  counts.reserve(hits.levels.size());
  for (const auto& level : hits.levels) {
    numeric::CompensatedSum w;
    long double count = 0.0L;
    for (const auto& e : level) {
      w.add(std::exp(e.log_mult + sigma * e.log_len));
      count += std::exp(static_cast<long double>(e.log_mult));
    }
    terms.push_back(w.value());
    counts.push_back(static_cast<double>(std::round(count)));
  }
  return from_terms(sigma, std::move(terms), std::move(counts));
}

inline ZetaEvaluation mf_zeta_partial(const CookieCutterMap& map, const Potential& psi, const ZetaConfig& cfg,
                                      double sigma, int levels, const ZetaOptions& opt = {}) {
  return evaluate(hit_table(map, psi, cfg, levels, opt), sigma);
}

inline std::vector<double> hit_counts(const CookieCutterMap& map, const Potential& psi, const ZetaConfig& cfg,
                                      int levels, const ZetaOptions& opt = {}) {
  return evaluate(hit_table(map, psi, cfg, levels, opt), 0.0).hits;
}

inline std::complex<double> geometric_zeta(std::span<const double> gaps, std::complex<double> s) {
  numeric::CompensatedSum re, im;
  for (double g : gaps) {
    if (!(g > 0.0)) fail(ErrorKind::InvalidArgument, "gap lengths must be positive");
    const auto t = std::exp(s * std::log(g));
    re.add(t.real());
    im.add(t.imag());
  }
  return {re.value(), im.value()};
}

/// Per-stage sums of gap^sigma, stages 1..N.
inline std::vector<double> gap_stage_terms(const CookieCutterMap& map, int stages, double sigma) {
  const auto gaps = dynamics::gap_lengths(map, stages);
  const std::size_t base = dynamics::gap_lengths(map, 1).size();
  std::vector<double> out;
  std::size_t pos = 0, count = base;
  for (int n = 1; n <= stages; ++n) {
    numeric::CompensatedSum s;
    for (std::size_t i = 0; i < count; ++i) s.add(std::pow(gaps[pos + i], sigma));
    out.push_back(s.value());
    pos += count;
    count *= static_cast<std::size_t>(map.k());
  }
  return out;
}

using Window = std::function<double(double)>;

namespace window {

inline Window indicator(double lo, double hi) {
  return [lo, hi](double x) { return x >= lo && x <= hi ? 1.0 : 0.0; };
}

inline Window gaussian(double width) {
  if (!(width > 0.0)) fail(ErrorKind::InvalidArgument, "Gaussian width must be positive");
  return [width](double x) { return std::exp(-x * x / (2.0 * width * width)); };
}

inline Window zero() {
  return [](double) { return 0.0; };
}

}  // namespace window

/// Sum over periodic points of period dividing n (one per word of length n)
/// of e^{s phi^n + xi V} g(V), V = psi^n - alpha phi^n.
inline std::complex<double> g_zeta_partial(const CookieCutterMap& map, const Potential& psi, double alpha,
                                           double xi, const Window& g, std::complex<double> s, int levels,
                                           const Execution& exec = {}) {
  dynamics::check_level(map, levels);
  psi.validate(map);
  const auto phi = Potential::log_derivative();
  std::vector<numeric::CompensatedSum> re(detail::slot_count(map.k(), levels)), im(re.size());
  detail::chunked_walk(map, nullptr, levels, exec, [&](std::size_t slot, auto&, const Cylinder& c) {
    const double x = c.rep_point();
    const double phin = phi.birkhoff(c, x);
    const double v = psi.birkhoff(c, x) - alpha * phin;
    const double weight = g(v);
    if (weight == 0.0) return;
    const auto t = std::exp(s * phin + xi * v) * weight;
    re[slot].add(t.real());
    im[slot].add(t.imag());
  });
  numeric::CompensatedSum r, i;
  for (std::size_t k = 0; k < re.size(); ++k) {
    r.add(re[k].value());
    i.add(im[k].value());
  }
  return {r.value(), i.value()};
}

using TermSeries = std::function<std::vector<double>(double)>;

/// Growth rate log r(sigma) of the level terms: slope of log w_n against n
/// over the last half of the levels (zero terms skipped).
inline double growth_rate(std::span<const double> terms) {
  const std::size_t n = terms.size();
  std::vector<double> x, y;
  for (std::size_t i = n / 2; i < n; ++i) {
    if (terms[i] > 0.0) {
      x.push_back(static_cast<double>(i + 1));
      y.push_back(std::log(terms[i]));
    }
  }
  if (x.size() < 2) return -std::numeric_limits<double>::infinity();
  return numeric::fit_line(x, y).slope;
}

/// sigma where the fitted per-level growth rate crosses 1, by bisection.
inline double abscissa_estimate(const TermSeries& series, double lo, double hi, double tol = 1e-4) {
  if (!(lo < hi)) fail(ErrorKind::InvalidArgument, "abscissa bracket must satisfy lo < hi");
  auto rate = [&](double s) { return growth_rate(series(s)); };
  double flo = rate(lo), fhi = rate(hi);
  if ((flo > 0.0) == (fhi > 0.0)) {
    fail(ErrorKind::NoSignChange, "level growth rate does not cross 1 on the bracket");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = rate(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct GrowthFit {
  std::vector<double> sigma;
  std::vector<double> zeta;
  double kappa = 0.0;
  double c = 0.0;
  double residual = 0.0;  // rms of the log-log fit
};

inline constexpr double tail_limit = 0.01;

/// Least squares log zeta = log c - kappa log(sigma - delta).
inline GrowthFit growth_exponent_fit(const std::function<ZetaEvaluation(double)>& evaluate_at, double delta,
                                     std::span<const double> sigmas) {
  if (sigmas.size() < 2) fail(ErrorKind::InvalidArgument, "growth fit needs two sigma values");
  GrowthFit fit;
  std::vector<double> x, y;
  for (double s : sigmas) {
    if (!(s > delta)) fail(ErrorKind::InvalidArgument, "growth fit needs sigma above delta");
    const auto z = evaluate_at(s);
    if (!(z.tail_estimate < tail_limit * z.partial_sum)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "tail %.3g is not below 1%% of the partial sum %.6g at sigma %.6g",
                    z.tail_estimate, z.partial_sum, s);
      fail(ErrorKind::TailNotConverged, buf);
    }
    fit.sigma.push_back(s);
    fit.zeta.push_back(z.partial_sum);
    x.push_back(std::log(s - delta));
    y.push_back(std::log(z.partial_sum));
  }
  const auto line = numeric::fit_line(x, y);
  fit.kappa = -line.slope;
  fit.c = std::exp(line.intercept);
  fit.residual = line.rms_residual;
  return fit;
}

inline GrowthFit growth_exponent_fit(const CookieCutterMap& map, const Potential& psi, const ZetaConfig& cfg,
                                     double delta, std::span<const double> sigmas, int levels,
                                     const ZetaOptions& opt = {}) {
  const auto hits = hit_table(map, psi, cfg, levels, opt);
  return growth_exponent_fit([&](double s) { return evaluate(hits, s); }, delta, sigmas);
}

struct SandwichReport {
  double zeta = 0.0;
  double upper_bound = 0.0;
  double lower_bound = 0.0;
  double upper_margin = 0.0;  // upper_bound - zeta
  double lower_margin = 0.0;  // zeta - lower_bound
  double distortion = 0.0;    // K for phi
  double ratio_lower = 0.0;   // C
  double ratio_upper = 0.0;   // D
  double chi1_lo = 0.0, chi1_hi = 0.0;
  double chi2_lo = 0.0, chi2_hi = 0.0;
  double upper_constant = 0.0;
  double lower_constant = 0.0;
};

/// Checks lower <= zeta <= upper where both bounds are g-zeta sums with
/// indicator windows. With mu(I_w) = gamma_w e^{psi^n(x_w)} (gamma in [C, D])
/// and |log|I_w| - phi^n(x_w)| <= K, a hit has V = psi^n - alpha phi^n in
/// [ln a - ln D - |alpha|K, ln b - ln C + |alpha|K], and V in
/// [ln a - ln C + |alpha|K, ln b - ln D - |alpha|K] forces a hit.
inline SandwichReport sandwich_check(const CookieCutterMap& map, const Potential& psi, const ZetaConfig& cfg,
                                     double xi, double sigma, int levels, int depth = 10) {
  cfg.validate();
  dynamics::check_level(map, levels);
  psi.validate(map);
  thermo::GibbsChain chain(map, psi, depth);
  thermo::require_normalized(chain.pressure(), "sandwich_check");
  const auto phi = Potential::log_derivative();

  struct Row {
    double log_len, log_mu, phin, v;
  };
  std::vector<Row> rows;
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin, K = 0.0;
  thermo::GibbsTracker tracker(chain, levels);
  dynamics::walk_cylinders(map, levels, [&](const Cylinder& c) {
    const double lm = tracker.log_weight(c);
    const double x = c.rep_point();
    const double phin = phi.birkhoff(c, x);
    const double psin = psi.birkhoff(c, x);
    const double gamma = lm - psin + c.level * chain.pressure();
    gmin = std::min(gmin, gamma);
    gmax = std::max(gmax, gamma);
    K = std::max(K, std::abs(phi.birkhoff(c, 0.0) - phi.birkhoff(c, 1.0)));
    rows.push_back({c.log_length(), lm, phin, psin - cfg.alpha * phin});
    return true;
  });

  SandwichReport r;
  r.distortion = K;
  r.ratio_lower = std::exp(gmin);
  r.ratio_upper = std::exp(gmax);
  const double la = cfg.log_a(), lb = cfg.log_b(), spread = std::abs(cfg.alpha) * K;
  r.chi1_lo = la - gmax - spread;
  r.chi1_hi = lb - gmin + spread;
  r.chi2_lo = la - gmin + spread;
  r.chi2_hi = lb - gmax - spread;
  if (!(r.chi2_lo < r.chi2_hi)) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "ln(b/a) = %.6g does not exceed ln(D/C) + 2|alpha|K = %.6g", lb - la,
                  (gmax - gmin) + 2.0 * spread);
    fail(ErrorKind::WindowDegenerate, buf);
  }
  const double kterm = std::abs(K * (sigma - xi * cfg.alpha));
  r.upper_constant = std::exp(kterm + std::max(xi * gmin, xi * gmax) + std::max(-xi * la, -xi * lb));
  r.lower_constant = std::exp(-kterm + std::min(xi * gmin, xi * gmax) + std::min(-xi * la, -xi * lb));

  numeric::CompensatedSum z, up, lo;
  for (const auto& row : rows) {
    if (cfg.hit(row.log_mu, row.log_len)) z.add(std::exp(sigma * row.log_len));
    const double t = std::exp(sigma * row.phin + xi * row.v);
    if (row.v >= r.chi1_lo && row.v <= r.chi1_hi) up.add(t);
    if (row.v >= r.chi2_lo && row.v <= r.chi2_hi) lo.add(t);
  }
  r.zeta = z.value();
  r.upper_bound = r.upper_constant * up.value();
  r.lower_bound = r.lower_constant * lo.value();
  r.upper_margin = r.upper_bound - r.zeta;
  r.lower_margin = r.zeta - r.lower_bound;
  return r;
}

}  // namespace zeta
}  // namespace cookiezeta
