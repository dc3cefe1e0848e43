// SPDX-License-Identifier: Apache-2.0

#include "explain.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <thread>

#include "oracle.hpp"

namespace ltshap {

Workspace::Workspace(int num_points) : width_(num_points) {
  c.resize(num_points, 1.0);
}

double* Workspace::acquire() {
  double* buf;
  if (free_.empty()) {
    buffers_.push_back(std::make_unique<double[]>(width_));
    buf = buffers_.back().get();
  } else {
    buf = free_.back();
    free_.pop_back();
  }
  ++in_use_;
  peak_ = std::max(peak_, in_use_);
  return buf;
}

void Workspace::release(double* buf) {
  free_.push_back(buf);
  --in_use_;
}

namespace {

// The traversal kernels below are shared verbatim by the fused and the
// two-pass paths; identical inputs go through identical operation sequences,
// which is what makes the two modes bit-identical.

struct Engine {
  const Tree& t;
  const Basis& basis;
  std::span<const double> x;
  Workspace& ws;
  std::span<double> phi;
  std::span<const double> y;
  int n; // basis points

  Engine(const Tree& tree, const Basis& b, std::span<const double> xx, Workspace& w,
         std::span<double> out)
      : t(tree), basis(b), x(xx), ws(w), phi(out), y(b.points()), n(b.num_points()) {}

  bool edge_satisfied(int32_t v) const {
    const int32_t u = t.parent[v];
    return (x[t.feature[u]] <= t.threshold[u]) == (t.in_edge_is_left[v] != 0);
  }

  void descend_edge(int32_t v) {
    const int32_t up = t.same_feature_ancestor[v];
    const double pup = up >= 0 ? ws.p[up] : 1.0;
    const double pv = edge_satisfied(v) ? pup * t.inv_in_edge_weight[v] : 0.0;
    ws.p[v] = pv;
    double* c = ws.c.data();
    for (int j = 0; j < n; ++j)
      c[j] *= y[j] + pv;
    if (up >= 0)
      for (int j = 0; j < n; ++j)
        c[j] /= y[j] + pup;
  }

  void undo_edge(int32_t v) {
    const int32_t up = t.same_feature_ancestor[v];
    double* c = ws.c.data();
    if (up >= 0) {
      const double pup = ws.p[up];
      for (int j = 0; j < n; ++j)
        c[j] *= y[j] + pup;
    }
    const double pv = ws.p[v];
    for (int j = 0; j < n; ++j)
      c[j] /= y[j] + pv;
  }

  void leaf_poly(int32_t v, double* g) const {
    const double r0 = t.leaf_r0[v];
    const double* c = ws.c.data();
    for (int j = 0; j < n; ++j)
      g[j] = c[j] * r0;
  }

  void fold_first(double* dst, const double* src, int lift) const {
    const double* L = basis.pow1p(lift).data();
    for (int j = 0; j < n; ++j)
      dst[j] = src[j] * L[j];
  }

  void fold_second(double* dst, const double* src, int lift) const {
    const double* L = basis.pow1p(lift).data();
    for (int j = 0; j < n; ++j)
      dst[j] += src[j] * L[j];
  }

  // Shapley contribution of the in-edge of v, computed from the node's
  // summary polynomial. Adds once into phi so both modes round identically.
  void emit_edge(int32_t v, const double* g) {
    const int de = t.poly_degree[v];
    const double pv = ws.p[v];
    const double* nd = basis.weights(de - 1).data();
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      acc += g[j] * nd[j] / (y[j] + pv);
    double term = (pv - 1.0) * (acc / de);

    const int32_t up = t.same_feature_ancestor[v];
    if (up >= 0) {
      const int dup = t.poly_degree[up];
      const double pup = ws.p[up];
      const double* nu = basis.weights(dup - 1).data();
      const double* L = basis.pow1p(dup - de).data();
      double acc2 = 0.0;
      for (int j = 0; j < n; ++j)
        acc2 += g[j] * L[j] * nu[j] / (y[j] + pup);
      term -= (pup - 1.0) * (acc2 / dup);
    }
    phi[t.in_edge_feature[v]] += term;
  }

  int32_t first_child(int32_t v) const {
    return t.visit_left_first[v] ? t.left[v] : t.right[v];
  }
  int32_t second_child(int32_t v) const {
    return t.visit_left_first[v] ? t.right[v] : t.left[v];
  }

  void run_fused() {
    auto& frames = ws.frames;
    frames.clear();
    frames.push_back({t.root, 0, nullptr});
    double* returned = nullptr;
    while (!frames.empty()) {
      Workspace::Frame& f = frames.back();
      const int32_t v = f.node;
      if (f.phase == 0) {
        if (v != t.root)
          descend_edge(v);
        if (t.is_leaf(v)) {
          double* g = ws.acquire();
          leaf_poly(v, g);
          if (v != t.root) {
            emit_edge(v, g);
            undo_edge(v);
          }
          frames.pop_back();
          returned = g;
        } else {
          f.phase = 1;
          frames.push_back({first_child(v), 0, nullptr});
        }
      } else if (f.phase == 1) {
        f.g = returned;
        fold_first(f.g, f.g, t.poly_degree[v] - t.poly_degree[first_child(v)]);
        f.phase = 2;
        frames.push_back({second_child(v), 0, nullptr});
      } else {
        fold_second(f.g, returned, t.poly_degree[v] - t.poly_degree[second_child(v)]);
        ws.release(returned);
        if (v != t.root) {
          emit_edge(v, f.g);
          undo_edge(v);
        }
        returned = f.g;
        frames.pop_back();
      }
    }
    ws.release(returned);
  }

  // First pass of the two-pass mode: fills ws.node_g with one acquired
  // buffer per node. The caller owns the release.
  void run_pass1() {
    auto& frames = ws.frames;
    auto& node_g = ws.node_g;
    node_g.assign(t.size(), nullptr);

    frames.clear();
    frames.push_back({t.root, 0, nullptr});
    double* returned = nullptr;
    while (!frames.empty()) {
      Workspace::Frame& f = frames.back();
      const int32_t v = f.node;
      if (f.phase == 0) {
        if (v != t.root)
          descend_edge(v);
        if (t.is_leaf(v)) {
          double* g = ws.acquire();
          leaf_poly(v, g);
          node_g[v] = g;
          if (v != t.root)
            undo_edge(v);
          frames.pop_back();
          returned = g;
        } else {
          f.phase = 1;
          frames.push_back({first_child(v), 0, nullptr});
        }
      } else if (f.phase == 1) {
        f.g = ws.acquire();
        fold_first(f.g, returned, t.poly_degree[v] - t.poly_degree[first_child(v)]);
        f.phase = 2;
        frames.push_back({second_child(v), 0, nullptr});
      } else {
        fold_second(f.g, returned, t.poly_degree[v] - t.poly_degree[second_child(v)]);
        node_g[v] = f.g;
        if (v != t.root)
          undo_edge(v);
        returned = f.g;
        frames.pop_back();
      }
    }
  }

  void run_two_pass() {
    run_pass1();
    auto& frames = ws.frames;
    auto& node_g = ws.node_g;

    // aggregation pass, same post-order as the fused unwind
    frames.clear();
    frames.push_back({t.root, 0, nullptr});
    while (!frames.empty()) {
      Workspace::Frame& f = frames.back();
      const int32_t v = f.node;
      if (f.phase == 0 && !t.is_leaf(v)) {
        f.phase = 1;
        frames.push_back({first_child(v), 0, nullptr});
      } else if (f.phase == 1) {
        f.phase = 2;
        frames.push_back({second_child(v), 0, nullptr});
      } else {
        if (v != t.root)
          emit_edge(v, node_g[v]);
        frames.pop_back();
      }
    }

    for (double*& g : node_g)
      if (g) {
        ws.release(g);
        g = nullptr;
      }
  }
};

} // namespace

void explain_tree(const Tree& tree, const Basis& basis, std::span<const double> x,
                  Method method, Workspace& ws, std::span<double> phi) {
  if (tree.max_degree > basis.degree())
    fail(Errc::unsupported, "tree distinct-feature depth " + std::to_string(tree.max_degree) +
                                " exceeds the basis degree " + std::to_string(basis.degree()));
  if (ws.num_points() != basis.num_points())
    fail(Errc::invalid_argument, "workspace was created for a different basis size");
  assert(method == Method::kFused || method == Method::kTwoPass);

  std::fill(ws.c.begin(), ws.c.end(), 1.0);
  if (static_cast<int>(ws.p.size()) < tree.size())
    ws.p.resize(tree.size());

  Engine eng(tree, basis, x, ws, phi);
  if (method == Method::kFused)
    eng.run_fused();
  else
    eng.run_two_pass();
}

SummaryPolys compute_summary_polynomials(const Tree& tree, const Basis& basis,
                                         std::span<const double> x) {
  check_instance(x, tree.num_features);
  if (tree.max_degree > basis.degree())
    fail(Errc::unsupported, "tree distinct-feature depth " + std::to_string(tree.max_degree) +
                                " exceeds the basis degree " + std::to_string(basis.degree()));
  Workspace ws(basis.num_points());
  ws.p.resize(tree.size(), 1.0);
  Engine eng(tree, basis, x, ws, {});
  eng.run_pass1();
  SummaryPolys out;
  out.values.resize(tree.size());
  for (int v = 0; v < tree.size(); ++v) {
    out.values[v].assign(ws.node_g[v], ws.node_g[v] + basis.num_points());
    ws.release(ws.node_g[v]);
  }
  out.p.assign(ws.p.begin(), ws.p.begin() + tree.size());
  out.p[tree.root] = 1.0;
  return out;
}

Attribution explain(const Model& model, const Basis& basis, std::span<const double> x,
                    Method method, Workspace& ws) {
  check_instance(x, model.num_features);
  Attribution out;
  out.phi.assign(model.num_features, 0.0);
  switch (method) {
  case Method::kFused:
  case Method::kTwoPass:
    for (const Tree& t : model.trees)
      explain_tree(t, basis, x, method, ws, out.phi);
    break;
  case Method::kCoeffRef:
    out.phi = coefficient_reference(model, x, CoeffPrecision::kDouble);
    break;
  case Method::kPerRule:
    for (const Tree& t : model.trees) {
      const std::vector<double> p = shapley_per_rule_total(t, x);
      for (int i = 0; i < model.num_features; ++i)
        out.phi[i] += p[i];
    }
    break;
  case Method::kBruteForce:
    out.phi = shapley_bruteforce(model, x);
    break;
  }
  out.base_value = model.base_value();
  out.prediction = predict(model, x);
  return out;
}

Attribution explain(const Model& model, const Basis& basis, std::span<const double> x,
                    Method method) {
  Workspace ws(basis.num_points());
  return explain(model, basis, x, method, ws);
}

BatchResult explain_batch(const Model& model, const Basis& basis, const double* X,
                          size_t rows, size_t row_width, int threads, Method method) {
  if (row_width != static_cast<size_t>(model.num_features))
    fail(Errc::invalid_argument, "row width " + std::to_string(row_width) +
                                     " does not match num_features " +
                                     std::to_string(model.num_features));
  if (rows > 0 && X == nullptr)
    fail(Errc::invalid_argument, "null instance matrix");

  BatchResult result;
  result.rows.resize(rows);
  result.status.resize(rows);

  const int nthreads =
      std::clamp<int>(threads < 1 ? 1 : threads, 1, static_cast<int>(std::max<size_t>(rows, 1)));
  std::atomic<size_t> next{0};
  std::atomic<bool> any_failed{false};

  auto worker = [&] {
    Workspace ws(basis.num_points());
    for (size_t i = next.fetch_add(1); i < rows; i = next.fetch_add(1)) {
      try {
        result.rows[i] =
            explain(model, basis, std::span<const double>(X + i * row_width, row_width), method, ws);
      } catch (const Error& e) {
        result.status[i] = {false, e.code(), e.what()};
        any_failed.store(true, std::memory_order_relaxed);
      } catch (const std::exception& e) {
        result.status[i] = {false, Errc::internal, e.what()};
        any_failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i)
      pool.emplace_back(worker);
    for (auto& th : pool)
      th.join();
  }
  result.all_ok = !any_failed.load();
  return result;
}

} // namespace ltshap
