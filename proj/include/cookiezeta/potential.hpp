#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cookiezeta/dynamics.hpp"
#include "cookiezeta/error.hpp"

namespace cookiezeta {

enum class PotentialKind { locally_constant, log_derivative, linear_combination };

/// A potential on the repeller of the form
///
///   constant + sum_i coeff_i * base_i,
///
/// where each base is either locally constant on first-level cylinders (one
/// weight per branch) or phi = -log|T'|. Combinations stay in this form, so
/// Birkhoff sums along a cylinder are exact: locally constant parts depend
/// only on symbol counts and the phi part is log|(g_w)'| by the chain rule.
class Potential {
 public:
  static Potential zero() { return Potential(PotentialKind::locally_constant); }

  static Potential constant(double c) {
    Potential p(PotentialKind::locally_constant);
    p.constant_ = c;
    return p;
  }

  /// psi = weights[i] on the first-level interval of branch i.
  static Potential locally_constant(std::vector<double> weights) {
    if (weights.empty()) fail(ErrorKind::InvalidArgument, "locally constant potential needs weights");
    for (double w : weights) {
      if (!std::isfinite(w)) fail(ErrorKind::InvalidArgument, "locally constant weights must be finite");
    }
    Potential p(PotentialKind::locally_constant);
    p.terms_.push_back({1.0, std::move(weights)});
    return p;
  }

  /// psi = log p_i; its Gibbs measure is the (p_1, ..., p_k) Bernoulli measure.
  static Potential bernoulli(std::span<const double> probabilities) {
    std::vector<double> w;
    w.reserve(probabilities.size());
    for (double p : probabilities) {
      if (!(p > 0.0)) fail(ErrorKind::InvalidArgument, "Bernoulli weights must be positive");
      w.push_back(std::log(p));
    }
    return locally_constant(std::move(w));
  }
  static Potential bernoulli(std::initializer_list<double> probabilities) {
    return bernoulli(std::span<const double>(probabilities.begin(), probabilities.size()));
  }

  /// phi = -log|T'|
  static Potential log_derivative() {
    Potential p(PotentialKind::log_derivative);
    p.terms_.push_back({1.0, {}});
    return p;
  }

  static Potential linear_combination(double c1, const Potential& p1, double c2, const Potential& p2,
                                      double constant = 0.0) {
    Potential p(PotentialKind::linear_combination);
    p.constant_ = c1 * p1.constant_ + c2 * p2.constant_ + constant;
    for (const auto& t : p1.terms_) p.terms_.push_back({c1 * t.coeff, t.weights});
    for (const auto& t : p2.terms_) p.terms_.push_back({c2 * t.coeff, t.weights});
    return p;
  }

  PotentialKind kind() const noexcept { return kind_; }
  double constant_term() const noexcept { return constant_; }

  /// Total coefficient of phi.
  double log_derivative_coefficient() const noexcept {
    double c = 0.0;
    for (const auto& t : terms_) {
      if (t.weights.empty()) c += t.coeff;
    }
    return c;
  }

  /// True when the potential is a function of the first symbol only on this
  /// map (no phi part, or every branch affine).
  bool locally_constant_on(const CookieCutterMap& map) const noexcept {
    return map.is_affine() || log_derivative_coefficient() == 0.0;
  }

  /// Per-symbol values; requires locally_constant_on(map).
  std::vector<double> symbol_values(const CookieCutterMap& map) const {
    if (!locally_constant_on(map)) fail(ErrorKind::InvalidArgument, "potential is not locally constant on this map");
    std::vector<double> v(static_cast<std::size_t>(map.k()), constant_);
    for (int s = 0; s < map.k(); ++s) {
      for (const auto& t : terms_) {
        v[s] += t.coeff * (t.weights.empty() ? map.branch(s).log_abs_det : t.weights[s]);
      }
    }
    return v;
  }

  void validate(const CookieCutterMap& map) const {
    for (const auto& t : terms_) {
      if (!t.weights.empty() && static_cast<int>(t.weights.size()) != map.k()) {
        fail(ErrorKind::InvalidArgument, "potential has " + std::to_string(t.weights.size()) +
                                             " weights but the map has " + std::to_string(map.k()) + " branches");
      }
    }
  }

  /// psi(x) for x in the first-level interval of `symbol`.
  double value(const CookieCutterMap& map, double x, int symbol) const {
    double v = constant_;
    for (const auto& t : terms_) {
      if (t.weights.empty()) {
        const Mobius& g = map.branch(symbol).map;
        v += t.coeff * std::log(std::abs(g.derivative(g.inverse(x))));
      } else {
        v += t.coeff * t.weights[static_cast<std::size_t>(symbol)];
      }
    }
    return v;
  }

  /// psi^n(g_w(z)) = sum_{j<n} psi(T^j g_w(z)) for the cylinder of w.
  double birkhoff(const Cylinder& cyl, double z) const {
    double v = constant_ * cyl.level;
    for (const auto& t : terms_) {
      if (t.weights.empty()) {
        v += t.coeff * cyl.log_derivative(z);
      } else {
        double s = 0.0;
        for (std::size_t i = 0; i < t.weights.size(); ++i) s += cyl.counts[i] * t.weights[i];
        v += t.coeff * s;
      }
    }
    return v;
  }

  /// psi^n at the periodic point of the cylinder's word.
  double birkhoff_at_rep(const Cylinder& cyl) const { return birkhoff(cyl, cyl.rep_point()); }

  Potential operator-() const { return linear_combination(-1.0, *this, 0.0, zero()); }
  friend Potential operator+(const Potential& a, const Potential& b) { return linear_combination(1.0, a, 1.0, b); }
  friend Potential operator-(const Potential& a, const Potential& b) { return linear_combination(1.0, a, -1.0, b); }
  friend Potential operator*(double c, const Potential& a) { return linear_combination(c, a, 0.0, zero()); }
  friend Potential operator+(const Potential& a, double c) { return linear_combination(1.0, a, 0.0, zero(), c); }
  friend Potential operator-(const Potential& a, double c) { return a + (-c); }

 private:
  struct Term {
    double coeff = 1.0;
    std::vector<double> weights;  // empty: phi
  };

  explicit Potential(PotentialKind kind) : kind_(kind) {}

  PotentialKind kind_;
  double constant_ = 0.0;
  std::vector<Term> terms_;
};

namespace dynamics {

/// psi^n at the periodic point whose itinerary repeats `word`.
inline double birkhoff_sum(const CookieCutterMap& map, const Potential& psi, const Word& word) {
  psi.validate(map);
  WordCylinder cyl(map, word);
  return psi.birkhoff_at_rep(cyl.get());
}

}  // namespace dynamics
}  // namespace cookiezeta
