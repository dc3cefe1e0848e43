// SPDX-License-Identifier: Apache-2.0

#include "tree_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace ltshap {

namespace {

constexpr double kWeightSumTol = 1e-9;

using json = nlohmann::json;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  fail(Errc::parse, where + ": " + what);
}

double require_number(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    parse_fail(where, std::string("missing or non-numeric field '") + key + "'");
  return it->get<double>();
}

int64_t require_int(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer())
    parse_fail(where, std::string("missing or non-integer field '") + key + "'");
  return it->get<int64_t>();
}

} // namespace

void Tree::finalize() {
  const int n = size();
  if (n <= 0)
    fail(Errc::validation, "tree has no nodes");
  if (root < 0 || root >= n)
    fail(Errc::validation, "root id out of range");

  std::vector<int> indegree(n, 0);
  for (int v = 0; v < n; ++v) {
    if (is_leaf(v)) {
      if (right[v] >= 0)
        fail(Errc::validation, "node " + std::to_string(v) + " has only one child");
      if (!std::isfinite(leaf_value[v]))
        fail(Errc::validation, "leaf " + std::to_string(v) + " has a non-finite value");
      continue;
    }
    if (right[v] < 0)
      fail(Errc::validation, "node " + std::to_string(v) + " has only one child");
    for (int32_t c : {left[v], right[v]}) {
      if (c < 0 || c >= n)
        fail(Errc::validation, "node " + std::to_string(v) + " references child " +
                                   std::to_string(c) + " out of range");
      if (c == v)
        fail(Errc::validation, "node " + std::to_string(v) + " is its own child");
      ++indegree[c];
    }
    if (left[v] == right[v])
      fail(Errc::validation, "node " + std::to_string(v) + " has duplicate children");
    if (feature[v] < 0 || feature[v] >= num_features)
      fail(Errc::validation, "node " + std::to_string(v) + " splits on feature " +
                                 std::to_string(feature[v]) + " but the model has " +
                                 std::to_string(num_features) + " features");
    if (!std::isfinite(threshold[v]))
      fail(Errc::validation, "node " + std::to_string(v) + " has a non-finite threshold");
    const double wl = left_weight[v], wr = right_weight[v];
    if (!std::isfinite(wl) || !std::isfinite(wr) || wl <= 0.0 || wl >= 1.0 || wr <= 0.0 ||
        wr >= 1.0)
      fail(Errc::validation, "node " + std::to_string(v) +
                                 " has edge weights outside (0, 1)");
    if (std::abs(wl + wr - 1.0) > kWeightSumTol)
      fail(Errc::validation, "node " + std::to_string(v) + " has edge weights that do not sum to 1");
  }
  if (indegree[root] != 0)
    fail(Errc::validation, "root is referenced as a child");
  for (int v = 0; v < n; ++v)
    if (v != root && indegree[v] > 1)
      fail(Errc::validation, "node " + std::to_string(v) + " has more than one parent");

  parent.assign(n, -1);
  in_edge_feature.assign(n, -1);
  in_edge_weight.assign(n, 1.0);
  inv_in_edge_weight.assign(n, 1.0);
  in_edge_is_left.assign(n, 0);
  same_feature_ancestor.assign(n, -1);
  path_degree.assign(n, 0);
  poly_degree.assign(n, 0);
  buffer_need.assign(n, 1);
  visit_left_first.assign(n, 1);
  leaf_r0.assign(n, 0.0);

  // Root-down pass: per-feature stacks of ancestor edge heads give the
  // same-feature ancestor and the distinct-feature degree in one sweep.
  std::vector<std::vector<int32_t>> feature_stack(std::max(num_features, 1));
  std::vector<double> path_weight(n, 1.0);
  std::vector<std::pair<int32_t, int>> stack; // node, next child slot (0,1,2=leave)
  stack.emplace_back(root, 0);
  int visited = 0;
  max_depth = 0;
  num_leaves = 0;
  base_value = 0.0;
  std::vector<int32_t> raw_depth(n, 0);
  while (!stack.empty()) {
    auto& [v, slot] = stack.back();
    if (slot == 0) {
      ++visited;
      if (v != root) {
        const int32_t u = parent[v];
        const int32_t f = feature[u];
        in_edge_feature[v] = f;
        const bool is_left = (left[u] == v);
        in_edge_is_left[v] = is_left ? 1 : 0;
        in_edge_weight[v] = is_left ? left_weight[u] : right_weight[u];
        inv_in_edge_weight[v] = 1.0 / in_edge_weight[v];
        auto& fs = feature_stack[f];
        same_feature_ancestor[v] = fs.empty() ? -1 : fs.back();
        path_degree[v] = path_degree[u] + (fs.empty() ? 1 : 0);
        fs.push_back(v);
        path_weight[v] = path_weight[u] * in_edge_weight[v];
        raw_depth[v] = raw_depth[u] + 1;
        max_depth = std::max(max_depth, static_cast<int>(raw_depth[v]));
      }
      if (is_leaf(v)) {
        leaf_r0[v] = path_weight[v] * leaf_value[v];
        ++num_leaves;
        slot = 2;
      } else {
        slot = 1;
        parent[left[v]] = v;
        stack.emplace_back(left[v], 0);
        continue;
      }
    } else if (slot == 1) {
      slot = 2;
      parent[right[v]] = v;
      stack.emplace_back(right[v], 0);
      continue;
    }
    // leaving v
    if (is_leaf(v)) {
      poly_degree[v] = path_degree[v];
      buffer_need[v] = 1;
    } else {
      const int32_t l = left[v], r = right[v];
      poly_degree[v] = std::max(poly_degree[l], poly_degree[r]);
      const int hi = std::max(buffer_need[l], buffer_need[r]);
      const int lo = std::min(buffer_need[l], buffer_need[r]);
      buffer_need[v] = std::max(hi, lo + 1);
      visit_left_first[v] = (buffer_need[l] >= buffer_need[r]) ? 1 : 0;
    }
    if (v != root)
      feature_stack[in_edge_feature[v]].pop_back();
    stack.pop_back();
  }
  if (visited != n)
    fail(Errc::validation, std::to_string(n - visited) + " node(s) unreachable from the root");

  for (int v = 0; v < n; ++v)
    base_value += leaf_r0[v];
  max_degree = poly_degree[root];
}

int Model::max_degree() const {
  int d = 0;
  for (const Tree& t : trees)
    d = std::max(d, t.max_degree);
  return d;
}

double Model::base_value() const {
  double b = bias;
  for (const Tree& t : trees)
    b += t.base_value;
  return b;
}

namespace {

Tree parse_tree(const json& jt, int num_features, const std::string& where) {
  if (!jt.is_object())
    parse_fail(where, "expected an object");
  auto nodes_it = jt.find("nodes");
  if (nodes_it == jt.end() || !nodes_it->is_array() || nodes_it->empty())
    parse_fail(where, "missing or empty 'nodes' array");
  const auto& jnodes = *nodes_it;
  const int n = static_cast<int>(jnodes.size());

  Tree t;
  t.num_features = num_features;
  t.root = static_cast<int32_t>(require_int(jt, "root", where));
  t.left.assign(n, -1);
  t.right.assign(n, -1);
  t.feature.assign(n, -1);
  t.threshold.assign(n, 0.0);
  t.left_weight.assign(n, 0.0);
  t.right_weight.assign(n, 0.0);
  t.leaf_value.assign(n, 0.0);

  std::vector<char> seen(n, 0);
  for (int k = 0; k < n; ++k) {
    const std::string nw = where + ".nodes[" + std::to_string(k) + "]";
    const json& jn = jnodes[k];
    if (!jn.is_object())
      parse_fail(nw, "expected an object");
    const int64_t id = require_int(jn, "id", nw);
    if (id < 0 || id >= n)
      parse_fail(nw, "id " + std::to_string(id) + " outside [0, " + std::to_string(n) + ")");
    if (seen[id])
      parse_fail(nw, "duplicate id " + std::to_string(id));
    seen[id] = 1;
    auto kind_it = jn.find("kind");
    if (kind_it == jn.end() || !kind_it->is_string())
      parse_fail(nw, "missing 'kind'");
    const std::string kind = kind_it->get<std::string>();
    if (kind == "leaf") {
      t.leaf_value[id] = require_number(jn, "value", nw);
    } else if (kind == "split") {
      t.feature[id] = static_cast<int32_t>(require_int(jn, "feature", nw));
      t.threshold[id] = require_number(jn, "threshold", nw);
      t.left[id] = static_cast<int32_t>(require_int(jn, "left", nw));
      t.right[id] = static_cast<int32_t>(require_int(jn, "right", nw));
      t.left_weight[id] = require_number(jn, "left_weight", nw);
      t.right_weight[id] = require_number(jn, "right_weight", nw);
      if (t.left[id] < 0 || t.left[id] >= n || t.right[id] < 0 || t.right[id] >= n)
        parse_fail(nw, "child id out of range");
    } else {
      parse_fail(nw, "unknown kind '" + kind + "'");
    }
  }
  t.finalize();
  return t;
}

} // namespace

Model parse_model(std::string_view json_text) {
  json doc = json::parse(json_text, /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded())
    fail(Errc::parse, "model document is not valid JSON");
  if (!doc.is_object())
    fail(Errc::parse, "model document must be a JSON object");

  Model m;
  const int64_t nf = require_int(doc, "num_features", "model");
  if (nf < 0 || nf > (int64_t(1) << 30))
    fail(Errc::parse, "model: num_features out of range");
  m.num_features = static_cast<int>(nf);

  if (auto it = doc.find("bias"); it != doc.end()) {
    if (!it->is_number())
      fail(Errc::parse, "model: 'bias' must be a number");
    m.bias = it->get<double>();
    if (!std::isfinite(m.bias))
      fail(Errc::validation, "model: 'bias' is not finite");
  }
  if (auto it = doc.find("feature_names"); it != doc.end()) {
    if (!it->is_array())
      fail(Errc::parse, "model: 'feature_names' must be an array of strings");
    for (const auto& s : *it) {
      if (!s.is_string())
        fail(Errc::parse, "model: 'feature_names' must be an array of strings");
      m.feature_names.push_back(s.get<std::string>());
    }
    if (static_cast<int>(m.feature_names.size()) != m.num_features)
      fail(Errc::validation, "model: feature_names length does not match num_features");
  }

  auto trees_it = doc.find("trees");
  if (trees_it == doc.end() || !trees_it->is_array())
    fail(Errc::parse, "model: missing 'trees' array");
  int idx = 0;
  for (const auto& jt : *trees_it) {
    m.trees.push_back(parse_tree(jt, m.num_features, "trees[" + std::to_string(idx) + "]"));
    ++idx;
  }
  return m;
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(Errc::io, "cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    fail(Errc::io, "error reading model file: " + path);
  return parse_model(ss.str());
}

std::string model_to_json(const Model& model) {
  nlohmann::ordered_json doc;
  doc["num_features"] = model.num_features;
  doc["bias"] = model.bias;
  if (!model.feature_names.empty())
    doc["feature_names"] = model.feature_names;
  doc["trees"] = nlohmann::ordered_json::array();
  for (const Tree& t : model.trees) {
    nlohmann::ordered_json jt;
    jt["root"] = t.root;
    auto& jnodes = jt["nodes"] = nlohmann::ordered_json::array();
    for (int v = 0; v < t.size(); ++v) {
      nlohmann::ordered_json jn;
      jn["id"] = v;
      if (t.is_leaf(v)) {
        jn["kind"] = "leaf";
        jn["value"] = t.leaf_value[v];
      } else {
        jn["kind"] = "split";
        jn["feature"] = t.feature[v];
        jn["threshold"] = t.threshold[v];
        jn["left"] = t.left[v];
        jn["right"] = t.right[v];
        jn["left_weight"] = t.left_weight[v];
        jn["right_weight"] = t.right_weight[v];
      }
      jnodes.push_back(std::move(jn));
    }
    doc["trees"].push_back(std::move(jt));
  }
  return doc.dump(2);
}

void check_instance(std::span<const double> x, int expect) {
  if (static_cast<int>(x.size()) != expect)
    fail(Errc::numeric, "instance has " + std::to_string(x.size()) + " values, model expects " +
                            std::to_string(expect));
  for (size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      fail(Errc::numeric, "feature " + std::to_string(i) + " is missing or not finite");
}

double predict(const Tree& tree, std::span<const double> x) {
  int32_t v = tree.root;
  while (!tree.is_leaf(v))
    v = (x[tree.feature[v]] <= tree.threshold[v]) ? tree.left[v] : tree.right[v];
  return tree.leaf_value[v];
}

double predict(const Model& model, std::span<const double> x) {
  check_instance(x, model.num_features);
  double out = model.bias;
  for (const Tree& t : model.trees)
    out += predict(t, x);
  return out;
}

} // namespace ltshap
