// SPDX-License-Identifier: Apache-2.0

#include "interp_basis.hpp"

#include <cmath>
#include <cstdint>

namespace ltshap {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
// three-term recurrence, refined in long double. n <= 33 here.
void gauss_legendre(int n, std::vector<long double>& x, std::vector<long double>& w) {
  x.assign(n, 0.0L);
  w.assign(n, 0.0L);
  const long double pi = 3.14159265358979323846264338327950288L;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    long double z = std::cos(pi * (i + 0.75L) / (n + 0.5L));
    long double pp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1.0L, p1 = 0.0L;
      for (int k = 0; k < n; ++k) {
        const long double p2 = p1;
        p1 = p0;
        p0 = ((2 * k + 1) * z * p1 - k * p2) / (k + 1);
      }
      // p0 = P_n(z), derivative from P_{n-1}
      pp = n * (z * p0 - p1) / (z * z - 1.0L);
      const long double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-19L)
        break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0L / ((1.0L - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

} // namespace

Basis::Basis(int max_degree) : D_(max_degree) {
  if (max_degree < 0)
    fail(Errc::invalid_argument, "basis degree must be non-negative");
  if (max_degree > kMaxSupportedDegree)
    fail(Errc::unsupported,
         "paths with more than " + std::to_string(kMaxSupportedDegree) +
             " distinct features are not supported (requested degree " +
             std::to_string(max_degree) + ")");

  const int n = D_ + 1;
  std::vector<long double> gx, gw;
  gauss_legendre(n, gx, gw);

  y_.resize(n);
  n_.resize(static_cast<size_t>(n) * n);
  pow_.resize(static_cast<size_t>(n) * n);

  std::vector<long double> t(n), halfw(n);
  for (int j = 0; j < n; ++j) {
    t[j] = (gx[j] + 1.0L) / 2.0L; // node on (0, 1)
    halfw[j] = gw[j] / 2.0L;      // integrates over (0, 1)
    y_[j] = static_cast<double>(t[j] / (1.0L - t[j]));
  }
  for (int d = 0; d < n; ++d) {
    for (int j = 0; j < n; ++j) {
      long double v = (d + 1) * halfw[j];
      for (int k = 0; k < d; ++k)
        v *= (1.0L - t[j]);
      n_[static_cast<size_t>(d) * n + j] = static_cast<double>(v);
    }
  }
  for (int j = 0; j < n; ++j) {
    long double acc = 1.0L;
    const long double base = 1.0L + static_cast<long double>(y_[j]);
    for (int k = 0; k < n; ++k) {
      pow_[static_cast<size_t>(k) * n + j] = static_cast<double>(acc);
      acc *= base;
    }
  }
}

std::span<const double> Basis::weights(int d) const {
  if (d < 0 || d > D_)
    fail(Errc::invalid_argument, "psi degree " + std::to_string(d) + " outside [0, " +
                                     std::to_string(D_) + "]");
  return {n_.data() + static_cast<size_t>(d) * (D_ + 1), static_cast<size_t>(D_ + 1)};
}

std::span<const double> Basis::pow1p(int k) const {
  if (k < 0 || k > D_)
    fail(Errc::invalid_argument, "pow1p exponent out of range");
  return {pow_.data() + static_cast<size_t>(k) * (D_ + 1), static_cast<size_t>(D_ + 1)};
}

ValuePoly poly_one(const Basis& basis) {
  return {std::vector<double>(basis.num_points(), 1.0), 0};
}

ValuePoly mul_linear(const Basis& basis, const ValuePoly& g, double shift) {
  if (g.degree >= basis.degree())
    fail(Errc::unsupported, "polynomial degree would exceed the basis");
  ValuePoly out = g;
  const auto y = basis.points();
  for (int j = 0; j < basis.num_points(); ++j)
    out.values[j] *= y[j] + shift;
  out.degree = g.degree + 1;
  return out;
}

ValuePoly div_linear(const Basis& basis, const ValuePoly& g, double shift) {
  if (shift < 0.0)
    fail(Errc::invalid_argument, "division shift must be non-negative (pole risk)");
  ValuePoly out = g;
  const auto y = basis.points();
  for (int j = 0; j < basis.num_points(); ++j)
    out.values[j] /= y[j] + shift;
  out.degree = g.degree - 1;
  return out;
}

ValuePoly add_scaled(const Basis& basis, const ValuePoly& a, const ValuePoly& b) {
  const ValuePoly& hi = a.degree >= b.degree ? a : b;
  const ValuePoly& lo = a.degree >= b.degree ? b : a;
  ValuePoly out;
  out.degree = hi.degree;
  out.values.resize(basis.num_points());
  const auto lift = basis.pow1p(hi.degree - lo.degree);
  for (int j = 0; j < basis.num_points(); ++j)
    out.values[j] = hi.values[j] + lo.values[j] * lift[j];
  return out;
}

double psi(const Basis& basis, const ValuePoly& g, int d) {
  const auto n = basis.weights(d);
  double acc = 0.0;
  for (int j = 0; j < basis.num_points(); ++j)
    acc += g.values[j] * n[j];
  return acc / (d + 1);
}

} // namespace ltshap
