// SPDX-License-Identifier: Apache-2.0

#include "oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "coeff_poly.hpp"
#include "dd.hpp"

namespace ltshap {

namespace {

double predict_active_rec(const Tree& t, std::span<const double> x, ActiveSet s, int32_t v) {
  if (t.is_leaf(v))
    return t.leaf_value[v];
  const int f = t.feature[v];
  if (s >> f & 1u) {
    const int32_t c = (x[f] <= t.threshold[v]) ? t.left[v] : t.right[v];
    return predict_active_rec(t, x, s, c);
  }
  return t.left_weight[v] * predict_active_rec(t, x, s, t.left[v]) +
         t.right_weight[v] * predict_active_rec(t, x, s, t.right[v]);
}

bool edge_satisfied(const Tree& t, std::span<const double> x, int32_t v) {
  const int32_t u = t.parent[v];
  return (x[t.feature[u]] <= t.threshold[u]) == (t.in_edge_is_left[v] != 0);
}

} // namespace

double predict_with_active_set(const Tree& tree, std::span<const double> x, ActiveSet s) {
  check_instance(x, tree.num_features);
  return predict_active_rec(tree, x, s, tree.root);
}

double predict_with_active_set(const Model& model, std::span<const double> x, ActiveSet s) {
  check_instance(x, model.num_features);
  double out = model.bias;
  for (const Tree& t : model.trees)
    out += predict_active_rec(t, x, s, t.root);
  return out;
}

double shapley_bruteforce(const Tree& tree, std::span<const double> x, int feature) {
  const int m = tree.num_features;
  if (m > kBruteForceMaxFeatures)
    fail(Errc::unsupported, "brute force limited to " +
                                std::to_string(kBruteForceMaxFeatures) + " features");
  if (feature < 0 || feature >= m)
    fail(Errc::invalid_argument, "feature index out of range");
  check_instance(x, m);

  double acc = 0.0;
  const uint32_t full = (m >= 32) ? 0xffffffffu : ((1u << m) - 1u);
  const uint32_t rest = full & ~(1u << feature);
  // enumerate subsets of rest, including the empty set
  uint32_t s = 0;
  while (true) {
    const int k = std::popcount(s);
    const double diff = predict_active_rec(tree, x, s | (1u << feature), tree.root) -
                        predict_active_rec(tree, x, s, tree.root);
    acc += diff / static_cast<double>(binomial(m - 1, k));
    if (s == rest)
      break;
    s = (s - rest) & rest; // next subset of rest
  }
  return acc / m;
}

std::vector<double> shapley_bruteforce(const Model& model, std::span<const double> x) {
  const int m = model.num_features;
  if (m > kBruteForceMaxFeatures)
    fail(Errc::unsupported, "brute force limited to " +
                                std::to_string(kBruteForceMaxFeatures) + " features");
  check_instance(x, m);
  std::vector<double> phi(m, 0.0);
  for (const Tree& t : model.trees)
    for (int i = 0; i < m; ++i)
      phi[i] += shapley_bruteforce(t, x, i);
  return phi;
}

std::vector<DecisionRule> linearize(const Tree& tree, std::span<const double> x) {
  check_instance(x, tree.num_features);
  std::vector<DecisionRule> rules;
  rules.reserve(tree.num_leaves);
  std::vector<int32_t> path; // edge heads, root side first

  // preorder walk keeping the current path
  std::vector<std::pair<int32_t, int>> stack{{tree.root, 0}};
  while (!stack.empty()) {
    auto& [v, slot] = stack.back();
    if (slot == 0) {
      slot = 1;
      if (v != tree.root)
        path.push_back(v);
      if (tree.is_leaf(v)) {
        DecisionRule r;
        r.leaf = v;
        r.r0 = tree.leaf_r0[v];
        r.q.assign(tree.num_features, 1.0);
        std::vector<char> violated(tree.num_features, 0);
        std::vector<char> seen(tree.num_features, 0);
        for (int32_t h : path) {
          const int f = tree.in_edge_feature[h];
          seen[f] = 1;
          if (edge_satisfied(tree, x, h))
            r.q[f] *= tree.inv_in_edge_weight[h];
          else
            violated[f] = 1;
        }
        for (int f = 0; f < tree.num_features; ++f) {
          if (!seen[f])
            continue;
          if (violated[f])
            r.q[f] = 0.0;
          r.used.push_back(f);
        }
        rules.push_back(std::move(r));
      } else {
        stack.emplace_back(tree.left[v], 0);
        continue;
      }
    } else if (slot == 1 && !tree.is_leaf(v)) {
      slot = 2;
      stack.emplace_back(tree.right[v], 0);
      continue;
    }
    if (v != tree.root)
      path.pop_back();
    stack.pop_back();
  }
  return rules;
}

double rule_prediction(const DecisionRule& rule, ActiveSet s) {
  double out = rule.r0;
  for (int32_t f : rule.used)
    if (s >> f & 1u)
      out *= rule.q[f];
  return out;
}

double shapley_per_rule(const DecisionRule& rule, int feature) {
  if (!std::binary_search(rule.used.begin(), rule.used.end(), feature))
    return 0.0;
  std::vector<double> g{rule.r0};
  for (int32_t f : rule.used)
    g = coeff_mul_linear(g, rule.q[f]);
  const std::vector<double> quot = coeff_div_linear(g, rule.q[feature]);
  return (rule.q[feature] - 1.0) * coeff_psi(quot);
}

std::vector<double> shapley_per_rule_total(const Tree& tree, std::span<const double> x) {
  std::vector<double> phi(tree.num_features, 0.0);
  for (const DecisionRule& r : linearize(tree, x))
    for (int32_t f : r.used)
      phi[f] += shapley_per_rule(r, f);
  return phi;
}

namespace {

template <class Real>
struct CoeffRefState {
  const Tree& t;
  std::span<const double> x;
  std::vector<Real> p;                    // p value of each node's in-edge
  std::vector<std::vector<Real>> g;       // summary polynomial per node
  std::vector<Real> phi;

  explicit CoeffRefState(const Tree& tree, std::span<const double> xx)
      : t(tree), x(xx), p(tree.size(), Real(1.0)), g(tree.size()),
        phi(tree.num_features, Real(0.0)) {}

  void down(int32_t v, std::vector<Real> c) {
    if (v != t.root) {
      const int32_t up = t.same_feature_ancestor[v];
      const Real pup = up >= 0 ? p[up] : Real(1.0);
      p[v] = edge_satisfied(t, x, v) ? pup * (Real(1.0) / Real(t.in_edge_weight[v]))
                                     : Real(0.0);
      c = coeff_mul_linear(c, p[v]);
      if (up >= 0)
        c = coeff_div_linear(c, p[up]); // exact: the factor is present in c
    }
    if (t.is_leaf(v)) {
      g[v] = std::move(c);
      for (Real& a : g[v])
        a *= Real(t.leaf_r0[v]);
      return;
    }
    down(t.left[v], c);
    down(t.right[v], std::move(c));
    std::vector<Real> gl = coeff_lift(g[t.left[v]], t.poly_degree[v] - t.poly_degree[t.left[v]]);
    std::vector<Real> gr = coeff_lift(g[t.right[v]], t.poly_degree[v] - t.poly_degree[t.right[v]]);
    for (size_t k = 0; k < gl.size(); ++k)
      gl[k] += gr[k];
    g[v] = std::move(gl);
  }

  void up(int32_t v) {
    if (!t.is_leaf(v)) {
      up(t.left[v]);
      up(t.right[v]);
    }
    if (v == t.root)
      return;
    const int f = t.in_edge_feature[v];
    phi[f] += (p[v] - Real(1.0)) * coeff_psi(coeff_div_linear(g[v], p[v]));
    const int32_t upn = t.same_feature_ancestor[v];
    if (upn >= 0) {
      const int lift = t.poly_degree[upn] - t.poly_degree[v];
      phi[f] -= (p[upn] - Real(1.0)) *
                coeff_psi(coeff_div_linear(coeff_lift(g[v], lift), p[upn]));
    }
  }
};

template <class Real>
std::vector<double> coeff_reference(const Tree& tree, std::span<const double> x) {
  CoeffRefState<Real> st(tree, x);
  st.down(tree.root, std::vector<Real>{Real(1.0)});
  st.up(tree.root);
  std::vector<double> out(tree.num_features);
  for (int i = 0; i < tree.num_features; ++i)
    out[i] = static_cast<double>(st.phi[i]);
  return out;
}

} // namespace

std::vector<double> coefficient_reference(const Tree& tree, std::span<const double> x,
                                                   CoeffPrecision prec) {
  check_instance(x, tree.num_features);
  return prec == CoeffPrecision::kDouble ? coeff_reference<double>(tree, x)
                                         : coeff_reference<DD>(tree, x);
}

std::vector<double> coefficient_reference(const Model& model, std::span<const double> x,
                                                   CoeffPrecision prec) {
  check_instance(x, model.num_features);
  std::vector<double> phi(model.num_features, 0.0);
  for (const Tree& t : model.trees) {
    const std::vector<double> p = coefficient_reference(t, x, prec);
    for (int i = 0; i < model.num_features; ++i)
      phi[i] += p[i];
  }
  return phi;
}

} // namespace ltshap
