#pragma once

#include "gazefusion/labels.hpp"
#include "gazefusion/surfel_map.hpp"

#include <span>
#include <utility>

namespace gazefusion {

/// Floor applied to observed probabilities before the product.
inline constexpr double kObservationFloor = 1e-6;

/// Bayesian label update: posterior_c ∝ prior_c · obs_c, in log space.
/// Observations are floored at kObservationFloor and renormalized first.
ClassDistribution bayes_update(const ClassDistribution& prior, std::span<const double> observation);
ClassDistribution bayes_update(const ClassDistribution& prior, std::span<const float> observation);

/// Applies every pixel's observation to its associated surfel, in raster
/// order. Returns the number of updates applied.
std::size_t fuse_frame(SurfelMap& map, const IndexMap& index_map, const ProbabilityFrame& probs);

/// Argmax class and its probability (ties to the smaller index).
std::pair<int, double> surfel_class(const Surfel& s);

}  // namespace gazefusion
