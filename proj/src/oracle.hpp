// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tree_model.hpp"

namespace ltshap {

// Slow, independent reference implementations used to validate the
// production engine. Pure functions over immutable inputs.

// Subset of feature indices as a bitmask; bit i set means feature i is
// observed. Limited to 24 features where enumeration is involved.
using ActiveSet = uint32_t;

inline constexpr int kBruteForceMaxFeatures = 24;

// Prediction with missing features routed to both children and averaged by
// the edge weights: split on an active feature follows the comparison,
// split on a missing feature returns wl*left + wr*right.
double predict_with_active_set(const Tree& tree, std::span<const double> x, ActiveSet s);
double predict_with_active_set(const Model& model, std::span<const double> x, ActiveSet s);

// Shapley value of one feature by direct enumeration of all 2^(m-1) subsets.
double shapley_bruteforce(const Tree& tree, std::span<const double> x, int feature);
std::vector<double> shapley_bruteforce(const Model& model, std::span<const double> x);

// One decision rule per leaf: the root-to-leaf path evaluated against x.
// q[i] is the multiplicative effect of adding feature i to the active set
// (1 when the path never tests i, 0 when x violates an i-criterion, the
// product of 1/w over the i-edges otherwise). r0 = leaf value * path weight.
struct DecisionRule {
  int32_t leaf = 0;
  double r0 = 0.0;
  std::vector<double> q;        // size num_features
  std::vector<int32_t> used;    // features tested on the path, ascending
};

std::vector<DecisionRule> linearize(const Tree& tree, std::span<const double> x);

// Prediction of one rule under an active set: r0 * prod_{i in s} q[i].
double rule_prediction(const DecisionRule& rule, ActiveSet s);

// Closed-form Shapley value of one rule for one feature, via exact
// coefficient arithmetic: (q_i - 1) * psi(G / (q_i + y)) with
// G = r0 * prod_j (q_j + y). Zero when the rule never tests the feature.
double shapley_per_rule(const DecisionRule& rule, int feature);
std::vector<double> shapley_per_rule_total(const Tree& tree, std::span<const double> x);

// The edge-summed form evaluated literally with coefficient polynomials and
// true floor division. Scalar is double for the fast baseline or DD for the
// high-precision oracle.
enum class CoeffPrecision { kDouble, kDoubleDouble };
std::vector<double> coefficient_reference(const Tree& tree, std::span<const double> x,
                                                   CoeffPrecision prec);
std::vector<double> coefficient_reference(const Model& model, std::span<const double> x,
                                                   CoeffPrecision prec);

} // namespace ltshap
