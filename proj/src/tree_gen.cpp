// SPDX-License-Identifier: Apache-2.0

#include "tree_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ltshap {

namespace {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) {
    // 53-bit mantissa draw; bit-reproducible across standard libraries
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  int below(int n) { return static_cast<int>(gen() % static_cast<uint64_t>(n)); }
};

struct Builder {
  const GenParams& p;
  Rng& rng;
  Tree t;
  std::vector<int32_t> depth;
  std::vector<uint64_t> used_mask; // features on the path, distinct mode only
  std::vector<int32_t> growable;   // leaf ids below max_depth

  Builder(const GenParams& params, Rng& r) : p(params), rng(r) {}

  int32_t add_leaf(int32_t d, uint64_t mask) {
    t.left.push_back(-1);
    t.right.push_back(-1);
    t.feature.push_back(-1);
    t.threshold.push_back(0.0);
    t.left_weight.push_back(0.0);
    t.right_weight.push_back(0.0);
    t.leaf_value.push_back(rng.uniform(p.value_lo, p.value_hi));
    depth.push_back(d);
    used_mask.push_back(mask);
    const int32_t id = static_cast<int32_t>(t.left.size()) - 1;
    if (d < p.max_depth)
      growable.push_back(id);
    return id;
  }

  int pick_feature(uint64_t mask) {
    if (!p.distinct_path_features)
      return rng.below(p.num_features);
    int free_count = 0;
    for (int f = 0; f < p.num_features; ++f)
      if (!(mask >> f & 1))
        ++free_count;
    int k = rng.below(free_count);
    for (int f = 0; f < p.num_features; ++f)
      if (!(mask >> f & 1) && k-- == 0)
        return f;
    return p.num_features - 1; // unreachable
  }

  // Turn leaf v into a split on `f` (or a drawn feature when f < 0);
  // returns the two children.
  std::pair<int32_t, int32_t> split_leaf(int32_t v, int forced_feature) {
    const int f = forced_feature >= 0 ? forced_feature : pick_feature(used_mask[v]);
    const double wl = rng.uniform(p.weight_lo, p.weight_hi);
    t.leaf_value[v] = 0.0; // no longer a leaf
    t.feature[v] = f;
    t.threshold[v] = rng.uniform(p.threshold_lo, p.threshold_hi);
    t.left_weight[v] = wl;
    t.right_weight[v] = 1.0 - wl;
    const uint64_t child_mask = used_mask[v] | (p.num_features <= 64 ? (1ull << f) : 0);
    const int32_t l = add_leaf(depth[v] + 1, child_mask);
    const int32_t r = add_leaf(depth[v] + 1, child_mask);
    t.left[v] = l;
    t.right[v] = r;
    growable.erase(std::find(growable.begin(), growable.end(), v));
    return {l, r};
  }

  Tree build() {
    t.num_features = p.num_features;
    t.root = 0;
    add_leaf(0, 0);
    int leaves = 1;
    // forced distinct-feature chain first
    if (p.spine > 0) {
      std::vector<int> order(p.num_features);
      for (int i = 0; i < p.num_features; ++i)
        order[i] = i;
      for (int i = p.num_features - 1; i > 0; --i)
        std::swap(order[i], order[rng.below(i + 1)]);
      int32_t cur = 0;
      for (int k = 0; k < p.spine; ++k) {
        auto [l, r] = split_leaf(cur, order[k]);
        ++leaves;
        cur = rng.below(2) ? l : r;
      }
    }
    const int target = std::min<long long>(p.target_leaves, 1ll << std::min(p.max_depth, 30));
    while (leaves < target && !growable.empty()) {
      const int32_t v = growable[rng.below(static_cast<int>(growable.size()))];
      split_leaf(v, -1);
      ++leaves;
    }
    t.finalize();
    return t;
  }
};

} // namespace

Model generate_random_model(const GenParams& params) {
  GenParams p = params;
  if (p.num_features < 1)
    fail(Errc::invalid_argument, "generator needs at least one feature");
  if (p.max_depth < 0 || p.spine < 0 || p.spine > p.max_depth)
    fail(Errc::invalid_argument, "generator depth parameters out of range");
  if ((p.distinct_path_features || p.spine > 0) && p.num_features > 64)
    fail(Errc::invalid_argument, "distinct-feature generation limited to 64 features");
  if (p.distinct_path_features && p.max_depth > p.num_features)
    fail(Errc::invalid_argument,
         "distinct-feature generation needs num_features >= max_depth");
  if (p.spine > p.num_features)
    fail(Errc::invalid_argument, "spine longer than the feature count");
  if (!(p.weight_lo > 0.0 && p.weight_hi < 1.0 && p.weight_lo <= p.weight_hi))
    fail(Errc::invalid_argument, "weight range must lie strictly inside (0, 1)");

  Rng rng(p.seed ^ 0x9e3779b97f4a7c15ull);
  Model m;
  m.num_features = p.num_features;
  for (int k = 0; k < std::max(p.num_trees, 0); ++k) {
    Builder b(p, rng);
    m.trees.push_back(b.build());
  }
  return m;
}

std::vector<double> random_instance(const Model& model, uint64_t seed, double tie_fraction) {
  Rng rng(seed ^ 0xd1b54a32d192ed03ull);
  std::vector<double> thresholds;
  for (const Tree& t : model.trees)
    for (int v = 0; v < t.size(); ++v)
      if (!t.is_leaf(v))
        thresholds.push_back(t.threshold[v]);

  double lo = 0.0, hi = 1.0;
  if (!thresholds.empty()) {
    const auto [mn, mx] = std::minmax_element(thresholds.begin(), thresholds.end());
    lo = *mn - 0.25;
    hi = *mx + 0.25;
  }
  std::vector<double> x(model.num_features);
  for (double& xi : x) {
    if (!thresholds.empty() && tie_fraction > 0.0 && rng.uniform(0.0, 1.0) < tie_fraction)
      xi = thresholds[rng.below(static_cast<int>(thresholds.size()))];
    else
      xi = rng.uniform(lo, hi);
  }
  return x;
}

} // namespace ltshap
