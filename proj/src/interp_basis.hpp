// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "error.hpp"

namespace ltshap {

// Fixed evaluation points for polynomials kept in value form, together with
// the per-degree weight vectors that evaluate the reciprocal-binomial
// functional straight from point values:
//
//   psi_d(p) = <coeffs(p), C_d> / (d+1),   C_d[k] = 1/binom(d,k)
//
// Using 1/binom(d,k) = (d+1) * Beta(k+1, d-k+1) the functional is the
// integral  psi_d(p) = integral_0^1 (1-t)^d p(t/(1-t)) dt,  a polynomial of
// degree d in t. Gauss-Legendre nodes t_j on (0,1) integrate it exactly, so
// with points y_j = t_j/(1-t_j) and weights N_d[j] = (d+1) w_j (1-t_j)^d:
//
//   <p(Y), N_d> = <coeffs(p), C_d>        for every p of degree <= d.
//
// All y_j are strictly positive (no pole for any shift in {0} u [1, inf))
// and all N_d entries are positive, so the evaluation is free of the
// cancellation a Vandermonde solve would introduce.
class Basis {
public:
  static constexpr int kMaxSupportedDegree = 32;

  explicit Basis(int max_degree);

  int degree() const { return D_; }
  int num_points() const { return D_ + 1; }
  std::span<const double> points() const { return y_; }
  // N_d, d in [0, degree()]
  std::span<const double> weights(int d) const;
  // pointwise (1+y_j)^k, k in [0, degree()]
  std::span<const double> pow1p(int k) const;

private:
  int D_;
  std::vector<double> y_;
  std::vector<double> n_;    // (D+1) x (D+1), row d
  std::vector<double> pow_;  // (D+1) x (D+1), row k
};

// A polynomial of nominal degree `degree`, stored as its values at the
// basis points. Plain data; owned by one thread at a time.
struct ValuePoly {
  std::vector<double> values;
  int degree = 0;
};

// The constant polynomial 1.
ValuePoly poly_one(const Basis& basis);

// g * (y + shift). Throws when the degree would exceed the basis.
ValuePoly mul_linear(const Basis& basis, const ValuePoly& g, double shift);

// g / (y + shift), pointwise. Exact when (y + shift) divides g; otherwise the
// sampled rational function, which the aggregation layer only ever feeds into
// telescoping sums where the inexact parts cancel pairwise. Shifts < 0 are
// rejected (they could place a pole on a point).
ValuePoly div_linear(const Basis& basis, const ValuePoly& g, double shift);

// Degree-aligned addition: the lower-degree operand is multiplied by
// (1+y)^|d1-d2| first; the result has degree max(d1, d2).
ValuePoly add_scaled(const Basis& basis, const ValuePoly& a, const ValuePoly& b);

// <values, N_d> / (d+1). Requires 0 <= d <= basis.degree().
double psi(const Basis& basis, const ValuePoly& g, int d);

} // namespace ltshap
