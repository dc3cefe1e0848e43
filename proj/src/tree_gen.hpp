// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "tree_model.hpp"

namespace ltshap {

// Synthetic random models for tests, conformance checks, and benchmarks.
// Trees are grown by repeatedly splitting a uniformly chosen growable leaf
// until the leaf target is reached. Fully deterministic for a given seed
// (the generator does not rely on distribution implementations that vary
// across standard libraries).
struct GenParams {
  int num_features = 10;
  int target_leaves = 16;  // clamped to 2^max_depth
  int max_depth = 8;
  int num_trees = 1;
  double weight_lo = 0.2, weight_hi = 0.8;   // split edge weights
  double threshold_lo = 0.0, threshold_hi = 1.0;
  double value_lo = -1.0, value_hi = 1.0;    // leaf values
  // Never repeat a feature along a root-to-leaf path. Requires
  // num_features >= max_depth and num_features <= 64.
  bool distinct_path_features = false;
  // Force a chain of `spine` splits on distinct features, pinning the
  // distinct-feature depth from below. 0 disables.
  int spine = 0;
  uint64_t seed = 0;
};

Model generate_random_model(const GenParams& params);

// Uniform instance draws matching the generator's threshold range; with
// probability tie_fraction a coordinate is placed exactly on a threshold
// present in the model to exercise boundary comparisons.
std::vector<double> random_instance(const Model& model, uint64_t seed,
                                    double tie_fraction = 0.0);

} // namespace ltshap
