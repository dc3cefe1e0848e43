// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "test_util.hpp"
#include "tree_gen.hpp"
#include "tree_model.hpp"

using namespace ltshap;

namespace {

std::string replace_first(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

} // namespace

TEST_CASE("rain model parses into one preprocessed tree") {
  const Model m = parse_model(kRainModelJson);
  CHECK(m.num_features == 3);
  CHECK(m.trees.size() == 1);
  const Tree& t = m.trees[0];
  CHECK(t.size() == 7);
  CHECK(t.num_leaves == 4);
  CHECK(t.max_degree == 3);
  CHECK(t.max_depth == 3);
  CHECK(m.feature_names == std::vector<std::string>{"temperature", "cloudy", "wind"});

  // distinct-feature degrees along the paths
  CHECK(t.path_degree[0] == 0); // root
  CHECK(t.path_degree[1] == 1); // leaf 0.5
  CHECK(t.path_degree[2] == 1); // cloudy node
  CHECK(t.path_degree[3] == 2); // wind node
  CHECK(t.path_degree[5] == 3); // leaf 0.4

  // each feature appears once per path: no same-feature ancestors anywhere
  for (int v = 0; v < t.size(); ++v)
    CHECK(t.same_feature_ancestor[v] == -1);

  CHECK(t.base_value == doctest::Approx(0.552).epsilon(1e-12));
}

TEST_CASE("single-leaf tree is a valid degenerate model") {
  const Model m = parse_model(R"({"num_features": 2, "trees": [{
      "root": 0, "nodes": [{"id":0,"kind":"leaf","value":0.5}]}]})");
  const std::vector<double> x = {1.0, -3.0};
  CHECK(predict(m, x) == 0.5);
  CHECK(m.trees[0].max_degree == 0);
  CHECK(m.trees[0].base_value == 0.5);
}

TEST_CASE("weights must sum to one and lie strictly inside (0,1)") {
  const std::string good(kRainModelJson);
  CHECK_THROWS_WITH_AS(parse_model(replace_first(good, "\"left_weight\":0.4", "\"left_weight\":0.5")),
                       doctest::Contains("sum to 1"), Error);
  for (const char* w : {"0.0", "1.0", "-0.25", "1.25"}) {
    const std::string bad = replace_first(
        replace_first(good, "\"left_weight\":0.4", std::string("\"left_weight\":") + w),
        "\"right_weight\":0.6", "\"right_weight\":0.5");
    CHECK_THROWS_AS(parse_model(bad), Error);
  }
}

TEST_CASE("structural violations are rejected") {
  SUBCASE("duplicate children") {
    CHECK_THROWS_WITH_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
        {"id":0,"kind":"split","feature":0,"threshold":0.5,"left":1,"right":1,
         "left_weight":0.5,"right_weight":0.5},
        {"id":1,"kind":"leaf","value":1.0},
        {"id":2,"kind":"leaf","value":2.0}]}]})"),
                         doctest::Contains("duplicate children"), Error);
  }
  SUBCASE("self loop") {
    CHECK_THROWS_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
        {"id":0,"kind":"split","feature":0,"threshold":0.5,"left":0,"right":1,
         "left_weight":0.5,"right_weight":0.5},
        {"id":1,"kind":"leaf","value":1.0}]}]})"),
                    Error);
  }
  SUBCASE("unreachable node") {
    CHECK_THROWS_WITH_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
        {"id":0,"kind":"split","feature":0,"threshold":0.5,"left":1,"right":2,
         "left_weight":0.5,"right_weight":0.5},
        {"id":1,"kind":"leaf","value":1.0},
        {"id":2,"kind":"leaf","value":2.0},
        {"id":3,"kind":"leaf","value":3.0}]}]})"),
                         doctest::Contains("unreachable"), Error);
  }
  SUBCASE("two parents") {
    CHECK_THROWS_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
        {"id":0,"kind":"split","feature":0,"threshold":0.5,"left":1,"right":2,
         "left_weight":0.5,"right_weight":0.5},
        {"id":1,"kind":"split","feature":0,"threshold":0.5,"left":3,"right":2,
         "left_weight":0.5,"right_weight":0.5},
        {"id":2,"kind":"leaf","value":1.0},
        {"id":3,"kind":"leaf","value":2.0}]}]})"),
                    Error);
  }
  SUBCASE("feature index out of range") {
    CHECK_THROWS_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
        {"id":0,"kind":"split","feature":1,"threshold":0.5,"left":1,"right":2,
         "left_weight":0.5,"right_weight":0.5},
        {"id":1,"kind":"leaf","value":1.0},
        {"id":2,"kind":"leaf","value":2.0}]}]})"),
                    Error);
  }
}

TEST_CASE("schema violations are rejected") {
  CHECK_THROWS_AS(parse_model("not json"), Error);
  CHECK_THROWS_AS(parse_model("[1,2,3]"), Error);
  CHECK_THROWS_AS(parse_model(R"({"trees": []})"), Error); // num_features missing
  CHECK_THROWS_AS(parse_model(R"({"num_features": 2})"), Error);
  CHECK_THROWS_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
      {"id":0,"kind":"leaf"}]}]})"),
                  Error); // leaf without value
  CHECK_THROWS_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
      {"id":0,"kind":"banana","value":1}]}]})"),
                  Error);
  CHECK_THROWS_AS(parse_model(R"({"num_features":1,"trees":[{"root":0,"nodes":[
      {"id":0,"kind":"leaf","value":"high"}]}]})"),
                  Error); // wrong type
  CHECK_THROWS_AS(parse_model(R"({"num_features":2,"feature_names":["a"],"trees":[
      {"root":0,"nodes":[{"id":0,"kind":"leaf","value":1}]}]})"),
                  Error); // name count mismatch
  // empty ensemble is fine
  const Model m = parse_model(R"({"num_features":2,"bias":0.25,"trees":[]})");
  CHECK(m.base_value() == 0.25);
}

TEST_CASE("same-feature ancestors on a repeated-feature chain") {
  // feature 0 tested twice along the left spine
  const Model m = parse_model(R"({"num_features":2,"trees":[{"root":0,"nodes":[
      {"id":0,"kind":"split","feature":0,"threshold":0.7,"left":1,"right":2,
       "left_weight":0.6,"right_weight":0.4},
      {"id":1,"kind":"split","feature":0,"threshold":0.3,"left":3,"right":4,
       "left_weight":0.5,"right_weight":0.5},
      {"id":2,"kind":"leaf","value":1.0},
      {"id":3,"kind":"leaf","value":2.0},
      {"id":4,"kind":"leaf","value":3.0}]}]})");
  const Tree& t = m.trees[0];
  CHECK(t.same_feature_ancestor[1] == -1);
  CHECK(t.same_feature_ancestor[3] == 1); // deeper 0-edge chains to the shallower one
  CHECK(t.same_feature_ancestor[4] == 1);
  CHECK(t.path_degree[3] == 1); // still one distinct feature
  CHECK(t.max_degree == 1);
}

TEST_CASE("predict follows left on ties and matches the worked example") {
  const Model m = parse_model(kRainModelJson);
  CHECK(predict(m, kRainInstance) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(predict(m, std::vector<double>{10.0, 1.0, 0.0}) == 0.5); // temperature <= 19
  CHECK(predict(m, std::vector<double>{19.0, 1.0, 0.0}) == 0.5); // tie goes left
  CHECK_THROWS_AS(predict(m, std::vector<double>{1.0, 2.0}), Error); // missing column
  const std::vector<double> with_nan = {20.0, std::nan(""), 6.0};
  CHECK_THROWS_AS(predict(m, with_nan), Error);
}

TEST_CASE("serialize / parse round trip reproduces the preprocessed tree") {
  TestRng rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    GenParams p;
    p.num_features = 1 + rng.below(10);
    p.max_depth = 1 + rng.below(7);
    p.target_leaves = 2 + rng.below(40);
    p.weight_lo = 0.05;
    p.weight_hi = 0.95;
    p.seed = rng.next();
    const Model a = generate_random_model(p);
    const Model b = parse_model(model_to_json(a));
    REQUIRE(a.trees.size() == b.trees.size());
    for (size_t k = 0; k < a.trees.size(); ++k) {
      const Tree& ta = a.trees[k];
      const Tree& tb = b.trees[k];
      REQUIRE(ta.size() == tb.size());
      CHECK(ta.left == tb.left);
      CHECK(ta.right == tb.right);
      CHECK(ta.feature == tb.feature);
      CHECK(ta.threshold == tb.threshold); // bit-exact doubles
      CHECK(ta.left_weight == tb.left_weight);
      CHECK(ta.leaf_value == tb.leaf_value);
      CHECK(ta.parent == tb.parent);
      CHECK(ta.same_feature_ancestor == tb.same_feature_ancestor);
      CHECK(ta.path_degree == tb.path_degree);
      CHECK(ta.poly_degree == tb.poly_degree);
      CHECK(ta.leaf_r0 == tb.leaf_r0);
      CHECK(ta.base_value == tb.base_value);
    }
  }
}

TEST_CASE("degree bookkeeping properties on random trees") {
  TestRng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    GenParams p;
    p.num_features = 1 + rng.below(8);
    p.max_depth = 1 + rng.below(8);
    p.target_leaves = 2 + rng.below(50);
    p.seed = rng.next();
    const Model m = generate_random_model(p);
    const Tree& t = m.trees[0];
    for (int v = 0; v < t.size(); ++v) {
      if (v == t.root)
        continue;
      const int pd = t.path_degree[t.parent[v]];
      // non-decreasing along any path, by at most one per edge
      CHECK(t.path_degree[v] >= pd);
      CHECK(t.path_degree[v] <= pd + 1);
      // degree bounded by the raw path length
      int len = 0;
      for (int u = v; u != t.root; u = t.parent[u])
        ++len;
      CHECK(t.path_degree[v] <= len);
      if (!t.is_leaf(v))
        CHECK(t.poly_degree[v] ==
              std::max(t.poly_degree[t.left[v]], t.poly_degree[t.right[v]]));
    }

    // chaining same_feature_ancestor from the deepest edge of each feature
    // enumerates exactly the feature's edges on the path
    for (int v = 0; v < t.size(); ++v) {
      if (!t.is_leaf(v))
        continue;
      for (int f = 0; f < t.num_features; ++f) {
        std::set<int> expected;
        int deepest = -1;
        for (int u = v; u != t.root; u = t.parent[u])
          if (t.in_edge_feature[u] == f) {
            expected.insert(u);
            if (deepest == -1)
              deepest = u;
          }
        std::set<int> chained;
        for (int u = deepest; u != -1; u = t.same_feature_ancestor[u])
          chained.insert(u);
        if (deepest == -1)
          CHECK(expected.empty());
        else
          CHECK(chained == expected);
      }
    }
  }
}

TEST_CASE("generator honors its constraints") {
  GenParams p;
  p.num_features = 18;
  p.max_depth = 18;
  p.spine = 18;
  p.target_leaves = 120;
  p.seed = 9;
  const Model m = generate_random_model(p);
  CHECK(m.trees[0].max_degree == 18); // spine pins the distinct-feature depth

  GenParams q;
  q.num_features = 8;
  q.max_depth = 8;
  q.distinct_path_features = true;
  q.target_leaves = 64;
  q.seed = 10;
  const Model md = generate_random_model(q);
  const Tree& t = md.trees[0];
  for (int v = 0; v < t.size(); ++v)
    CHECK(t.same_feature_ancestor[v] == -1);
}
