// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "test_util.hpp"
#include "tree_gen.hpp"
#include "tree_model.hpp"

using namespace ltshap;

namespace {

ActiveSet set_of(std::initializer_list<int> features) {
  ActiveSet s = 0;
  for (int f : features)
    s |= 1u << f;
  return s;
}

} // namespace

TEST_CASE("active-set prediction on the rain model") {
  const Model m = parse_model(kRainModelJson);
  const Tree& t = m.trees[0];
  // temperature missing: 0.5 * 0.5 + 0.5 * 0.4
  CHECK(predict_with_active_set(t, kRainInstance, set_of({1, 2})) ==
        doctest::Approx(0.45).epsilon(1e-15));
  // all features: the plain prediction
  CHECK(predict_with_active_set(t, kRainInstance, set_of({0, 1, 2})) ==
        doctest::Approx(0.4).epsilon(1e-15));
  // nothing active: the base value
  CHECK(predict_with_active_set(t, kRainInstance, 0) ==
        doctest::Approx(0.552).epsilon(1e-12));
}

TEST_CASE("brute force reproduces the worked Shapley values") {
  const Model m = parse_model(kRainModelJson);
  const Tree& t = m.trees[0];
  CHECK(shapley_bruteforce(t, kRainInstance, 0) == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(shapley_bruteforce(t, kRainInstance, 1) == doctest::Approx(-0.123).epsilon(1e-12));
  CHECK(shapley_bruteforce(t, kRainInstance, 2) == doctest::Approx(-0.033).epsilon(1e-12));
  const std::vector<double> phi = shapley_bruteforce(m, kRainInstance);
  const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
  CHECK(total == doctest::Approx(0.4 - 0.552).epsilon(1e-12));
}

TEST_CASE("brute force of an absent feature is zero") {
  // model has 4 features, tree only uses 3
  std::string json(kRainModelJson);
  json.replace(json.find("\"num_features\": 3"), 17, "\"num_features\": 4");
  json.replace(json.find("[\"temperature\", \"cloudy\", \"wind\"]"), 33,
               "[\"temperature\", \"cloudy\", \"wind\", \"unused\"]");
  const Model m = parse_model(json);
  const std::vector<double> x = {20.0, 0.0, 6.0, 1.0};
  CHECK(shapley_bruteforce(m.trees[0], x, 3) == 0.0);
}

TEST_CASE("brute force feature-count guard") {
  GenParams p;
  p.num_features = 25;
  p.max_depth = 3;
  p.target_leaves = 4;
  const Model m = generate_random_model(p);
  std::vector<double> x(25, 0.5);
  CHECK_THROWS_AS(shapley_bruteforce(m, x), Error);
}

TEST_CASE("linearization of the rain model") {
  const Model m = parse_model(kRainModelJson);
  const auto rules = linearize(m.trees[0], kRainInstance);
  REQUIRE(rules.size() == 4);

  // rule of leaf 5 (prediction 0.4): all three criteria satisfied
  const auto* rc = &rules[0];
  for (const auto& r : rules)
    if (r.leaf == 5)
      rc = &r;
  REQUIRE(rc->leaf == 5);
  CHECK(rc->q[0] == doctest::Approx(2.0).epsilon(1e-15));        // 1/0.5
  CHECK(rc->q[1] == doctest::Approx(2.5).epsilon(1e-15));        // 1/0.4
  CHECK(rc->q[2] == doctest::Approx(1.0 / 0.7).epsilon(1e-15));  // 1/0.7
  CHECK(rc->r0 == doctest::Approx(0.056).epsilon(1e-12));

  // rule of leaf 4 (prediction 0.7): cloudy=yes violated by x
  const auto* ra = &rules[0];
  for (const auto& r : rules)
    if (r.leaf == 4)
      ra = &r;
  REQUIRE(ra->leaf == 4);
  CHECK(ra->q[1] == 0.0);
  CHECK(ra->q[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ra->q[2] == 1.0); // wind not on that path: empty product

  // rule of leaf 1 (prediction 0.5): only temperature tested, criterion violated
  const auto* rd = &rules[0];
  for (const auto& r : rules)
    if (r.leaf == 1)
      rd = &r;
  CHECK(rd->q[0] == 0.0);
  CHECK(rd->used == std::vector<int32_t>{0});
}

TEST_CASE("per-rule closed form sums to the brute-force values") {
  const Model m = parse_model(kRainModelJson);
  const Tree& t = m.trees[0];
  const std::vector<double> phi = shapley_per_rule_total(t, kRainInstance);
  CHECK(phi[0] == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(phi[1] == doctest::Approx(-0.123).epsilon(1e-12));
  CHECK(phi[2] == doctest::Approx(-0.033).epsilon(1e-12));
}

TEST_CASE("per-rule worked identities") {
  DecisionRule r;
  r.leaf = 0;
  r.r0 = 0.25;
  r.q = {3.0, 1.0};
  r.used = {0};
  // single tested feature: phi = (q - 1) * r0
  CHECK(shapley_per_rule(r, 0) == doctest::Approx((3.0 - 1.0) * 0.25).epsilon(1e-15));
  // untested feature: exactly zero
  CHECK(shapley_per_rule(r, 1) == 0.0);
}

TEST_CASE("linearization identity: rules sum to the tree prediction") {
  TestRng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    GenParams p;
    p.num_features = 1 + rng.below(8);
    p.max_depth = 1 + rng.below(6);
    p.target_leaves = 2 + rng.below(30);
    p.weight_lo = 0.05;
    p.weight_hi = 0.95;
    p.seed = rng.next();
    const Model m = generate_random_model(p);
    const Tree& t = m.trees[0];
    const std::vector<double> x = random_instance(m, rng.next(), 0.25);
    const auto rules = linearize(t, x);

    const ActiveSet full = (1u << p.num_features) - 1u;
    double sum_full = 0.0;
    for (const auto& r : rules)
      sum_full += rule_prediction(r, full);
    CHECK(close_abs(sum_full, predict(t, x), 1e-10));

    const ActiveSet s = static_cast<ActiveSet>(rng.next()) & full;
    double sum_s = 0.0;
    for (const auto& r : rules)
      sum_s += rule_prediction(r, s);
    CHECK(close_abs(sum_s, predict_with_active_set(t, x, s), 1e-10));
  }
}

TEST_CASE("brute-force efficiency: shapley values sum to f(x) - f_empty(x)") {
  TestRng rng(37);
  for (int trial = 0; trial < 25; ++trial) {
    GenParams p;
    p.num_features = 1 + rng.below(6);
    p.max_depth = 1 + rng.below(5);
    p.target_leaves = 2 + rng.below(20);
    p.weight_lo = 0.05;
    p.weight_hi = 0.95;
    p.seed = rng.next();
    const Model m = generate_random_model(p);
    const std::vector<double> x = random_instance(m, rng.next(), 0.25);
    const std::vector<double> phi = shapley_bruteforce(m, x);
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    const double expect = predict(m, x) - predict_with_active_set(m, x, 0);
    CHECK(close_abs(total, expect, 1e-10));
  }
}

TEST_CASE("coefficient-form reference matches brute force on random trees") {
  const Model rain = parse_model(kRainModelJson);
  const std::vector<double> ref =
      coefficient_reference(rain.trees[0], kRainInstance, CoeffPrecision::kDouble);
  CHECK(ref[0] == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(ref[1] == doctest::Approx(-0.123).epsilon(1e-12));
  CHECK(ref[2] == doctest::Approx(-0.033).epsilon(1e-12));

  TestRng rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    GenParams p;
    p.num_features = 1 + rng.below(6);
    p.max_depth = 1 + rng.below(5);
    p.target_leaves = 2 + rng.below(24);
    p.weight_lo = 0.05;
    p.weight_hi = 0.95;
    p.seed = rng.next();
    const Model m = generate_random_model(p);
    const std::vector<double> x = random_instance(m, rng.next(), 0.25);
    const std::vector<double> bf = shapley_bruteforce(m, x);
    for (const CoeffPrecision prec : {CoeffPrecision::kDouble, CoeffPrecision::kDoubleDouble}) {
      const std::vector<double> tc = coefficient_reference(m, x, prec);
      for (int i = 0; i < p.num_features; ++i)
        CHECK(close_abs(tc[i], bf[i], 1e-10));
    }
  }
}

TEST_CASE("coefficient reference of a single-leaf tree is all zeros") {
  const Model m = parse_model(R"({"num_features":2,"trees":[{"root":0,
      "nodes":[{"id":0,"kind":"leaf","value":1.5}]}]})");
  const std::vector<double> x = {0.0, 0.0};
  for (double v : coefficient_reference(m, x, CoeffPrecision::kDoubleDouble))
    CHECK(v == 0.0);
  for (double v : shapley_bruteforce(m, x))
    CHECK(v == 0.0);
}

TEST_CASE("double-double arithmetic beats plain double on deep cancellation") {
  // a repeated-feature chain with extreme weights makes the coefficient
  // route cancel heavily; the DD instantiation must stay glued to brute force
  GenParams p;
  p.num_features = 6;
  p.max_depth = 12;
  p.target_leaves = 40;
  p.weight_lo = 0.05;
  p.weight_hi = 0.95;
  p.seed = 4242;
  const Model m = generate_random_model(p);
  TestRng rng(43);
  for (int k = 0; k < 5; ++k) {
    const std::vector<double> x = random_instance(m, rng.next(), 0.25);
    const std::vector<double> bf = shapley_bruteforce(m, x);
    const std::vector<double> dd =
        coefficient_reference(m, x, CoeffPrecision::kDoubleDouble);
    for (int i = 0; i < p.num_features; ++i)
      CHECK(close_abs(dd[i], bf[i], 1e-12));
  }
}
