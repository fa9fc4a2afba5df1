#pragma once

// Cookie-cutter maps given by their inverse branches.
//
// Every branch is a Mobius transformation (affine maps are the c = 0 case), so
// the composition g_{w1} o ... o g_{wn} along a word is again Mobius and is
// carried as a normalized 2x2 matrix plus log|det|. Lengths and derivatives of
// deep cylinders are then computed from closed forms instead of by
// subtracting nearly equal endpoints.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cookiezeta/error.hpp"
#include "cookiezeta/numeric.hpp"

namespace cookiezeta {

/// x -> (a x + b) / (c x + d)
struct Mobius {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double operator()(double x) const noexcept { return (a * x + b) / (c * x + d); }
  double det() const noexcept { return a * d - b * c; }
  double derivative(double x) const noexcept {
    const double den = c * x + d;
    return det() / (den * den);
  }
  double inverse(double y) const noexcept { return (d * y - b) / (a - c * y); }

  /// this o other
  Mobius compose(const Mobius& o) const noexcept {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  double max_abs() const noexcept { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }
  Mobius scaled(double s) const noexcept { return {a * s, b * s, c * s, d * s}; }
};

enum class BranchKind { affine, moebius };

/// One inverse branch g : [0,1] -> [lo, hi].
struct BranchSpec {
  BranchKind kind = BranchKind::affine;
  std::array<double, 4> params{};  // affine: slope, intercept; moebius: a, b, c, d
  std::optional<std::pair<double, double>> image;  // checked against g([0,1]) when given

  static BranchSpec affine(double slope, double intercept) {
    return {BranchKind::affine, {slope, intercept, 0.0, 0.0}, std::nullopt};
  }
  static BranchSpec moebius(double a, double b, double c, double d) {
    return {BranchKind::moebius, {a, b, c, d}, std::nullopt};
  }
  BranchSpec with_image(double lo, double hi) const {
    BranchSpec s = *this;
    s.image = std::make_pair(lo, hi);
    return s;
  }

  Mobius as_mobius() const noexcept {
    if (kind == BranchKind::affine) return {params[0], params[1], 0.0, 1.0};
    return {params[0], params[1], params[2], params[3]};
  }
};

struct Branch {
  BranchSpec spec;
  Mobius map;
  double lo = 0.0, hi = 0.0;
  double log_abs_det = 0.0;
  double sup_derivative = 0.0;  // sampled sup |g'|
  double inf_derivative = 0.0;  // sampled inf |g'|
  bool increasing = true;
};

class CookieCutterMap {
 public:
  CookieCutterMap() = default;
  explicit CookieCutterMap(std::vector<Branch> branches) : branches_(std::move(branches)) {
    sup_ = 0.0;
    inf_ = std::numeric_limits<double>::infinity();
    affine_ = true;
    for (const auto& b : branches_) {
      sup_ = std::max(sup_, b.sup_derivative);
      inf_ = std::min(inf_, b.inf_derivative);
      affine_ = affine_ && b.map.c == 0.0;
    }
  }

  int k() const noexcept { return static_cast<int>(branches_.size()); }
  const Branch& branch(int i) const { return branches_.at(static_cast<std::size_t>(i)); }
  std::span<const Branch> branches() const noexcept { return branches_; }
  double sup_derivative() const noexcept { return sup_; }
  double inf_derivative() const noexcept { return inf_; }
  bool is_affine() const noexcept { return affine_; }

 private:
  std::vector<Branch> branches_;
  double sup_ = 0.0;
  double inf_ = 0.0;
  bool affine_ = true;
};

namespace dynamics {

inline constexpr int derivative_samples = 1 << 12;
inline constexpr double image_tolerance = 1e-12;
/// Largest number of cylinders enumerated at a single level (2^22).
inline constexpr std::uint64_t max_cylinders_per_level = std::uint64_t{1} << 22;

/// Deepest level whose k^n cylinders stay within max_cylinders_per_level.
inline int max_level(int k) {
  int n = 0;
  std::uint64_t count = 1;
  while (count * static_cast<std::uint64_t>(k) <= max_cylinders_per_level) {
    count *= static_cast<std::uint64_t>(k);
    ++n;
  }
  return n;
}

inline Branch validate_branch(const BranchSpec& spec, int index) {
  const std::string where = "branch " + std::to_string(index + 1);
  Branch br;
  br.spec = spec;
  br.map = spec.as_mobius();
  const Mobius& g = br.map;
  for (double v : spec.params) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidBranch, where + " has a non-finite coefficient");
  }
  const double den0 = g.d, den1 = g.c + g.d;
  if (den0 == 0.0 || den1 == 0.0 || (den0 > 0.0) != (den1 > 0.0)) {
    fail(ErrorKind::InvalidBranch, where + " has a pole in [0,1]");
  }
  if (g.det() == 0.0) fail(ErrorKind::NonMonotone, where + " is constant");

  double sup = 0.0, inf = std::numeric_limits<double>::infinity();
  int sign = 0;
  for (int i = 0; i <= derivative_samples; ++i) {
    const double x = static_cast<double>(i) / derivative_samples;
    const double dg = g.derivative(x);
    const int s = dg > 0.0 ? 1 : (dg < 0.0 ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) fail(ErrorKind::NonMonotone, where + " is not strictly monotone");
    sign = s;
    sup = std::max(sup, std::abs(dg));
    inf = std::min(inf, std::abs(dg));
  }
  if (sup >= 1.0) {
    fail(ErrorKind::NotContracting, where + " has sup|g'| = " + std::to_string(sup) + " >= 1");
  }
  br.sup_derivative = sup;
  br.inf_derivative = inf;
  br.increasing = sign > 0;
  br.lo = std::min(g(0.0), g(1.0));
  br.hi = std::max(g(0.0), g(1.0));
  br.log_abs_det = std::log(std::abs(g.det()));
  if (br.lo < -image_tolerance || br.hi > 1.0 + image_tolerance) {
    fail(ErrorKind::InvalidBranch, where + " maps outside [0,1]");
  }
  if (spec.image) {
    const auto [lo, hi] = *spec.image;
    if (std::abs(lo - br.lo) > image_tolerance || std::abs(hi - br.hi) > image_tolerance) {
      fail(ErrorKind::InvalidBranch, where + " image does not match g([0,1])");
    }
  }
  return br;
}

/// Validates the branch list and returns the map.
inline CookieCutterMap build_map(std::span<const BranchSpec> specs) {
  if (specs.size() < 2) fail(ErrorKind::InvalidBranch, "a cookie-cutter map needs at least two branches");
  if (specs.size() > 255) fail(ErrorKind::InvalidBranch, "too many branches");
  std::vector<Branch> branches;
  branches.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) branches.push_back(validate_branch(specs[i], static_cast<int>(i)));
  for (std::size_t i = 0; i < branches.size(); ++i) {
    for (std::size_t j = i + 1; j < branches.size(); ++j) {
      const double lo = std::max(branches[i].lo, branches[j].lo);
      const double hi = std::min(branches[i].hi, branches[j].hi);
      if (hi - lo > image_tolerance) {
        fail(ErrorKind::OverlappingBranches, "images of branches " + std::to_string(i + 1) + " and " +
                                                 std::to_string(j + 1) + " overlap");
      }
    }
  }
  for (std::size_t i = 0; i + 1 < branches.size(); ++i) {
    if (branches[i + 1].lo < branches[i].lo) {
      fail(ErrorKind::InvalidBranch, "branch images must be ordered left to right");
    }
  }
  return CookieCutterMap(std::move(branches));
}

inline CookieCutterMap build_map(std::initializer_list<BranchSpec> specs) {
  return build_map(std::span<const BranchSpec>(specs.begin(), specs.size()));
}

}  // namespace dynamics

/// A finite word over the branch alphabet. Symbols are stored 0-based; the
/// text form is 1-based ("12" is branch 1 followed by branch 2).
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<std::uint8_t> symbols) : symbols_(std::move(symbols)) {}

  static Word from_one_based(std::initializer_list<int> symbols) {
    std::vector<std::uint8_t> s;
    s.reserve(symbols.size());
    for (int v : symbols) {
      if (v < 1 || v > 255) fail(ErrorKind::InvalidArgument, "word symbols are 1-based");
      s.push_back(static_cast<std::uint8_t>(v - 1));
    }
    return Word(std::move(s));
  }

  /// Inverse of index(): the n-symbol word with the given lexicographic rank.
  static Word from_index(std::uint64_t index, int n, int k) {
    std::vector<std::uint8_t> s(static_cast<std::size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(index % static_cast<std::uint64_t>(k));
      index /= static_cast<std::uint64_t>(k);
    }
    return Word(std::move(s));
  }

  int size() const noexcept { return static_cast<int>(symbols_.size()); }
  bool empty() const noexcept { return symbols_.empty(); }
  int operator[](int i) const { return symbols_.at(static_cast<std::size_t>(i)); }
  std::span<const std::uint8_t> symbols() const noexcept { return symbols_; }

  std::uint64_t index(int k) const noexcept {
    std::uint64_t idx = 0;
    for (auto s : symbols_) idx = idx * static_cast<std::uint64_t>(k) + s;
    return idx;
  }

  void check(int k) const {
    if (symbols_.empty()) fail(ErrorKind::InvalidArgument, "empty word");
    for (auto s : symbols_) {
      if (s >= k) fail(ErrorKind::InvalidArgument, "word symbol out of range");
    }
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(symbols_[i] + 1);
    }
    return out;
  }

  friend bool operator==(const Word&, const Word&) = default;

 private:
  std::vector<std::uint8_t> symbols_;
};

/// The cylinder g_{w1} o ... o g_{wn}([0,1]) together with the composed map.
///
/// `map` is the composition rescaled to unit max-entry; `log_det` is
/// log|det| of that rescaled matrix, accumulated from the branch
/// determinants so it stays accurate when the entries are nearly dependent.
struct Cylinder {
  int level = 0;
  std::uint64_t index = 0;
  std::span<const std::uint8_t> word;
  std::span<const int> counts;  // occurrences of each symbol in word
  Mobius map;
  double log_det = 0.0;

  double point(double z) const noexcept { return map(z); }
  /// log|(g_{w1} o ... o g_{wn})'(z)|
  double log_derivative(double z) const noexcept { return log_det - 2.0 * std::log(std::abs(map.c * z + map.d)); }
  double log_length() const noexcept {
    return log_det - std::log(std::abs(map.d)) - std::log(std::abs(map.c + map.d));
  }
  double length() const noexcept { return std::exp(log_length()); }
  double left() const noexcept { return std::min(map(0.0), map(1.0)); }
  double right() const noexcept { return std::max(map(0.0), map(1.0)); }

  /// The point of period n whose itinerary repeats this word.
  double rep_point() const {
    if (!rep_) rep_ = fixed_point(map);
    return *rep_;
  }

  static double fixed_point(const Mobius& m) {
    double x = 0.5;
    for (int it = 0; it < 200; ++it) {
      const double next = m(x);
      if (std::abs(next - x) < 1e-15) return next;
      x = next;
    }
    return x;
  }

 private:
  mutable std::optional<double> rep_;
};

namespace dynamics {

namespace detail {

inline Mobius normalize(const Mobius& m, double& log_det) {
  const double s = m.max_abs();
  log_det -= 2.0 * std::log(s);
  return m.scaled(1.0 / s);
}

}  // namespace detail

/// Owns the storage behind a Cylinder built for one explicit word.
class WordCylinder {
 public:
  WordCylinder(const CookieCutterMap& map, const Word& word) : word_(word), counts_(map.k(), 0) {
    word.check(map.k());
    Mobius m;
    double log_det = 0.0;
    for (auto s : word.symbols()) {
      const Branch& br = map.branch(s);
      m = m.compose(br.map);
      log_det += br.log_abs_det;
      m = detail::normalize(m, log_det);
      ++counts_[s];
    }
    cyl_.level = word.size();
    cyl_.index = word.index(map.k());
    cyl_.word = word_.symbols();
    cyl_.counts = counts_;
    cyl_.map = m;
    cyl_.log_det = log_det;
  }
  WordCylinder(const WordCylinder&) = delete;
  WordCylinder& operator=(const WordCylinder&) = delete;

  const Cylinder& get() const noexcept { return cyl_; }
  const Cylinder* operator->() const noexcept { return &cyl_; }

 private:
  Word word_;
  std::vector<int> counts_;
  Cylinder cyl_;
};

/// Depth-first, lexicographic (preorder) walk over every cylinder whose word
/// extends `root` and whose level lies in [max(1, |root|), max_level].
/// `visit(const Cylinder&)` returns false to skip the subtree below.
template <class Visitor>
void walk_cylinders(const CookieCutterMap& map, int max_level, Visitor&& visit, const Word& root = Word()) {
  const int k = map.k();
  const int r = root.size();
  if (max_level < r) return;
  std::vector<std::uint8_t> word(static_cast<std::size_t>(max_level));
  std::vector<std::vector<int>> counts(static_cast<std::size_t>(max_level + 1), std::vector<int>(k, 0));
  std::vector<Mobius> maps(static_cast<std::size_t>(max_level + 1));
  std::vector<double> log_dets(static_cast<std::size_t>(max_level + 1), 0.0);
  std::vector<std::uint64_t> index(static_cast<std::size_t>(max_level + 1), 0);

  for (int d = 1; d <= r; ++d) {
    const auto s = root.symbols()[static_cast<std::size_t>(d - 1)];
    if (s >= k) fail(ErrorKind::InvalidArgument, "root word symbol out of range");
    word[static_cast<std::size_t>(d - 1)] = s;
    counts[d] = counts[d - 1];
    ++counts[d][s];
    log_dets[d] = log_dets[d - 1] + map.branch(s).log_abs_det;
    maps[d] = detail::normalize(maps[d - 1].compose(map.branch(s).map), log_dets[d]);
    index[d] = index[d - 1] * static_cast<std::uint64_t>(k) + s;
  }

  auto make = [&](int d) {
    Cylinder c;
    c.level = d;
    c.index = index[d];
    c.word = std::span<const std::uint8_t>(word.data(), static_cast<std::size_t>(d));
    c.counts = counts[d];
    c.map = maps[d];
    c.log_det = log_dets[d];
    return c;
  };

  auto descend = [&](auto&& self, int d) -> void {
    // invariant: frames 0..d are filled for the current path
    if (d >= 1) {
      if (!visit(make(d))) return;
    }
    if (d == max_level) return;
    for (int s = 0; s < k; ++s) {
      const int nd = d + 1;
      word[static_cast<std::size_t>(d)] = static_cast<std::uint8_t>(s);
      counts[nd] = counts[d];
      ++counts[nd][s];
      log_dets[nd] = log_dets[d] + map.branch(s).log_abs_det;
      maps[nd] = detail::normalize(maps[d].compose(map.branch(s).map), log_dets[nd]);
      index[nd] = index[d] * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(s);
      self(self, nd);
    }
  };
  descend(descend, r);
}

/// Calls visit(const Cylinder&) for every cylinder of level exactly n.
template <class Visitor>
void for_each_cylinder_at(const CookieCutterMap& map, int n, Visitor&& visit) {
  walk_cylinders(map, n, [&](const Cylinder& c) {
    if (c.level == n) visit(c);
    return true;
  });
}

/// Enumerates one word per cyclic class (the lexicographically least
/// rotation) for each length 1..max_length, in increasing length.
template <class Visitor>
void for_each_necklace(int k, int max_length, Visitor&& visit) {
  for (int n = 1; n <= max_length; ++n) {
    std::vector<std::uint8_t> a(static_cast<std::size_t>(n + 1), 0);
    auto gen = [&](auto&& self, int t, int p) -> void {
      if (t > n) {
        if (n % p == 0) visit(std::span<const std::uint8_t>(a.data() + 1, static_cast<std::size_t>(n)));
        return;
      }
      a[static_cast<std::size_t>(t)] = a[static_cast<std::size_t>(t - p)];
      self(self, t + 1, p);
      for (int j = a[static_cast<std::size_t>(t - p)] + 1; j < k; ++j) {
        a[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(j);
        self(self, t + 1, t);
      }
    };
    gen(gen, 1, 1);
  }
}

struct BasicInterval {
  Word word;
  double left = 0.0;
  double right = 0.0;
  double length = 0.0;
  double rep_point = 0.0;
};

struct PeriodicPoint {
  double x = 0.0;
  Word word;
  int n = 0;
};

inline void check_level(const CookieCutterMap& map, int n) {
  if (n < 1) fail(ErrorKind::InvalidArgument, "level must be at least 1");
  if (n > max_level(map.k())) {
    fail(ErrorKind::LevelTooLarge, "level " + std::to_string(n) + " exceeds " + std::to_string(max_level(map.k())));
  }
}

/// The k^n basic intervals of level n in lexicographic word order.
inline std::vector<BasicInterval> basic_intervals(const CookieCutterMap& map, int n) {
  check_level(map, n);
  std::vector<BasicInterval> out;
  out.reserve(numeric::ipow(static_cast<std::uint64_t>(map.k()), n));
  for_each_cylinder_at(map, n, [&](const Cylinder& c) {
    BasicInterval bi;
    bi.word = Word(std::vector<std::uint8_t>(c.word.begin(), c.word.end()));
    bi.left = c.left();
    bi.right = c.right();
    bi.length = c.length();
    bi.rep_point = std::clamp(c.rep_point(), bi.left, bi.right);
    out.push_back(std::move(bi));
  });
  return out;
}

inline PeriodicPoint periodic_point(const CookieCutterMap& map, const Word& word) {
  WordCylinder cyl(map, word);
  return {cyl->rep_point(), word, word.size()};
}

/// Lengths of the complementary gaps removed at stages 1..N (with
/// multiplicity). Stage n consists of the images of the stage-1 gaps under
/// every level-(n-1) composition.
inline std::vector<double> gap_lengths(const CookieCutterMap& map, int stages) {
  if (stages < 1) fail(ErrorKind::InvalidArgument, "stage count must be at least 1");
  if (stages - 1 > max_level(map.k())) fail(ErrorKind::LevelTooLarge, "too many gap stages");
  std::vector<std::pair<double, double>> base;
  double cursor = 0.0;
  for (const auto& br : map.branches()) {
    if (br.lo > cursor) base.emplace_back(cursor, br.lo);
    cursor = br.hi;
  }
  if (cursor < 1.0) base.emplace_back(cursor, 1.0);

  std::vector<double> out;
  auto emit = [&](const Mobius& m, double log_det) {
    for (const auto& [x1, x2] : base) {
      const double len =
          std::exp(log_det - std::log(std::abs(m.c * x1 + m.d)) - std::log(std::abs(m.c * x2 + m.d))) * (x2 - x1);
      out.push_back(len);
    }
  };
  emit(Mobius{}, 0.0);
  for (int n = 1; n < stages; ++n) {
    for_each_cylinder_at(map, n, [&](const Cylinder& c) { emit(c.map, c.log_det); });
  }
  return out;
}

}  // namespace dynamics
}  // namespace cookiezeta
