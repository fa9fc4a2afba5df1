#pragma once

#include <cmath>

#include "cookiezeta/dynamics.hpp"
#include "cookiezeta/potential.hpp"

namespace fixtures {

using cookiezeta::BranchSpec;

inline const double ln2 = std::log(2.0);
inline const double ln3 = std::log(3.0);
inline const double cantor_dim = ln2 / ln3;
// -(0.5 ln 0.3 + 0.5 ln 0.7) / ln 3: the regularity of the max-entropy measure
inline const double alpha0 = -(0.5 * std::log(0.3) + 0.5 * std::log(0.7)) / ln3;
inline const double alpha_max = -std::log(0.3) / ln3;

inline cookiezeta::CookieCutterMap cantor() {
  return cookiezeta::dynamics::build_map(
      {BranchSpec::affine(1.0 / 3.0, 0.0).with_image(0.0, 1.0 / 3.0),
       BranchSpec::affine(1.0 / 3.0, 2.0 / 3.0).with_image(2.0 / 3.0, 1.0)});
}

inline cookiezeta::CookieCutterMap moebius() {
  return cookiezeta::dynamics::build_map({BranchSpec::moebius(0.3, 0.0, 0.2, 1.0).with_image(0.0, 0.25),
                                          BranchSpec::moebius(0.5, 0.6, 0.1, 1.0).with_image(0.6, 1.0)});
}

inline cookiezeta::Potential bernoulli(double p) { return cookiezeta::Potential::bernoulli({p, 1.0 - p}); }

}  // namespace fixtures
