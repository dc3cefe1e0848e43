// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace ltshap {

// A validated decision tree in traversal-ready form. Nodes are indexed
// 0..size()-1; split nodes have two children (full binary), leaves none.
// Everything is immutable after finalize() and safe to share across threads.
//
// The derived per-node fields describe the in-edge of a node v (the edge
// from parent(v) to v, labelled with the parent's split feature):
//   in_edge_weight[v]         w_e, the parent's conditional probability
//   in_edge_feature[v]        the parent's split feature
//   same_feature_ancestor[v]  head node of the nearest strict-ancestor edge
//                             with the same feature, or -1
//   path_degree[v]            distinct features on the root-to-v path
//   poly_degree[v]            max path_degree over the leaves under v; the
//                             nominal degree of v's summary polynomial
//   buffer_need[v]            scratch polynomials needed to evaluate the
//                             subtree of v with the canonical child order
class Tree {
public:
  // parsed fields (leaf nodes keep feature == -1, left == right == -1)
  std::vector<int32_t> left, right;
  std::vector<int32_t> feature;
  std::vector<double> threshold;
  std::vector<double> left_weight, right_weight;
  std::vector<double> leaf_value;

  // derived fields, filled by finalize()
  std::vector<int32_t> parent;
  std::vector<int32_t> in_edge_feature;
  std::vector<double> in_edge_weight;
  std::vector<double> inv_in_edge_weight;
  std::vector<uint8_t> in_edge_is_left;
  std::vector<int32_t> same_feature_ancestor;
  std::vector<int32_t> path_degree;
  std::vector<int32_t> poly_degree;
  std::vector<int32_t> buffer_need;
  std::vector<uint8_t> visit_left_first; // canonical child order per split
  std::vector<double> leaf_r0;           // leaf value times path weight product

  int32_t root = 0;
  int num_features = 0;
  int max_degree = 0;    // poly_degree[root]; 0 for a single-leaf tree
  int max_depth = 0;     // raw edge count of the deepest path
  int num_leaves = 0;
  double base_value = 0; // sum of leaf_r0 = expected prediction, no features

  int size() const { return static_cast<int>(left.size()); }
  bool is_leaf(int32_t v) const { return left[v] < 0; }

  // Validates structure and weights, then computes the derived fields.
  // Throws Error on violation.
  void finalize();
};

struct Model {
  std::vector<Tree> trees;
  int num_features = 0;
  double bias = 0.0;
  std::vector<std::string> feature_names; // empty when the file had none

  int max_degree() const;
  double base_value() const;
};

// Parses and validates a model document (JSON, see README for the schema).
Model parse_model(std::string_view json_text);
Model load_model_file(const std::string& path);

// Serializes in the same schema; parse_model(model_to_json(m)) reproduces m.
std::string model_to_json(const Model& model);

// Standard traversal: left iff x[feature] <= threshold. Throws on a
// missing-sized or non-finite instance.
double predict(const Tree& tree, std::span<const double> x);
double predict(const Model& model, std::span<const double> x);

// Throws Errc::numeric unless x has exactly `expect` finite entries.
void check_instance(std::span<const double> x, int expect);

} // namespace ltshap
