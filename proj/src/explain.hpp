// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "interp_basis.hpp"
#include "tree_model.hpp"

namespace ltshap {

enum class Method {
  kFused,     // single traversal, scratch bounded by the ancestor stack
  kTwoPass,   // stores one summary polynomial per node, then aggregates
  kCoeffRef,  // coefficient-form reference (double), quadratic in depth
  kPerRule,   // closed form summed over decision rules
  kBruteForce // subset enumeration, <= 24 features
};

struct Attribution {
  std::vector<double> phi;
  double base_value = 0.0;
  double prediction = 0.0;
};

// Per-call scratch space: a pool of value-form polynomial buffers plus the
// path state. Reusable across calls; owned by a single thread at a time.
// The pool counters make the engine's memory behaviour observable: the
// fused traversal keeps at most buffer_need[root] buffers live, which is
// bounded by (distinct-feature depth + 1) when no feature repeats along a
// path and by the tree's pebble number in general.
class Workspace {
public:
  explicit Workspace(int num_points);

  double* acquire();
  void release(double* buf);
  int polys_in_use() const { return in_use_; }
  int peak_polys() const { return peak_; }
  void reset_peak() { peak_ = in_use_; }
  int num_points() const { return width_; }

  // engine scratch
  std::vector<double> c; // shared path polynomial, mutated in place
  std::vector<double> p; // per-node p value of the in-edge
  std::vector<double*> node_g;
  struct Frame {
    int32_t node;
    int8_t phase;
    double* g;
  };
  std::vector<Frame> frames;

private:
  int width_;
  std::vector<std::unique_ptr<double[]>> buffers_;
  std::vector<double*> free_;
  int in_use_ = 0;
  int peak_ = 0;
};

// Adds one tree's Shapley contributions into phi (size num_features).
// method must be kFused or kTwoPass; both produce bit-identical phi.
void explain_tree(const Tree& tree, const Basis& basis, std::span<const double> x,
                  Method method, Workspace& ws, std::span<double> phi);

// The top-down pass on its own: the summary polynomial of every node in
// value form (values at the basis points, nominal degree poly_degree[v])
// together with the p value of every node's in-edge (1 for the root).
struct SummaryPolys {
  std::vector<std::vector<double>> values; // indexed by node
  std::vector<double> p;                    // indexed by node
};
SummaryPolys compute_summary_polynomials(const Tree& tree, const Basis& basis,
                                         std::span<const double> x);

Attribution explain(const Model& model, const Basis& basis, std::span<const double> x,
                    Method method, Workspace& ws);
Attribution explain(const Model& model, const Basis& basis, std::span<const double> x,
                    Method method = Method::kFused);

struct RowStatus {
  bool ok = true;
  Errc code = Errc::invalid_argument;
  std::string message;
};

struct BatchResult {
  std::vector<Attribution> rows; // rows[i].phi is empty when !status[i].ok
  std::vector<RowStatus> status;
  bool all_ok = true;
};

// Explains `rows` instances stored row-major in X. Rows are independent and
// the result is identical for every thread count. Per-row failures (e.g.
// non-finite values) are recorded in status without aborting the batch.
BatchResult explain_batch(const Model& model, const Basis& basis, const double* X,
                          size_t rows, size_t row_width, int threads, Method method);

} // namespace ltshap
