// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"

namespace ltshap {

// Dense coefficient-form polynomial helpers for the reference
// implementations, templated on the scalar so the same code runs in plain
// double (benchmark baseline) and in double-double (high-precision oracle).
// Coefficient index == power of y.

// Exact binomial coefficients; n <= 62 keeps everything inside uint64_t
// (the reference paths never exceed n = 33).
inline uint64_t binomial(int n, int k) {
  if (k < 0 || k > n)
    return 0;
  k = std::min(k, n - k);
  uint64_t r = 1;
  for (int i = 1; i <= k; ++i)
    r = r * static_cast<uint64_t>(n - k + i) / static_cast<uint64_t>(i);
  return r;
}

// a(y) * (y + shift)
template <class Real>
std::vector<Real> coeff_mul_linear(const std::vector<Real>& a, Real shift) {
  std::vector<Real> out(a.size() + 1, Real(0.0));
  for (size_t k = 0; k < a.size(); ++k) {
    out[k] += a[k] * shift;
    out[k + 1] += a[k];
  }
  return out;
}

// Synthetic division by (y + shift): a = q*(y+shift) + rem. Returns the
// quotient (the floor of the division); the remainder is discarded by the
// callers that rely on telescoping cancellation and asserted ~0 by the ones
// performing exact divisions.
template <class Real>
std::vector<Real> coeff_div_linear(const std::vector<Real>& a, Real shift,
                                   Real* remainder = nullptr) {
  const size_t n = a.size() - 1;
  std::vector<Real> q(n, Real(0.0));
  Real cur = a[n];
  for (size_t k = n; k-- > 0;) {
    q[k] = cur;
    cur = a[k] - cur * shift;
  }
  if (remainder)
    *remainder = cur;
  return q;
}

// a(y) * (1+y)^k
template <class Real>
std::vector<Real> coeff_lift(std::vector<Real> a, int k) {
  for (int i = 0; i < k; ++i) {
    std::vector<Real> out(a.size() + 1, Real(0.0));
    for (size_t j = 0; j < a.size(); ++j) {
      out[j] += a[j];
      out[j + 1] += a[j];
    }
    a = std::move(out);
  }
  return a;
}

// <a, C_d> / (d+1) with C_d[k] = 1/binom(d,k), d = deg(a).
template <class Real>
Real coeff_psi(const std::vector<Real>& a) {
  const int d = static_cast<int>(a.size()) - 1;
  Real acc(0.0);
  for (int k = 0; k <= d; ++k)
    acc += a[k] / Real(static_cast<double>(binomial(d, k)));
  return acc / Real(static_cast<double>(d + 1));
}

template <class Real>
Real coeff_eval(const std::vector<Real>& a, Real x) {
  Real acc(0.0);
  for (size_t k = a.size(); k-- > 0;)
    acc = acc * x + a[k];
  return acc;
}

} // namespace ltshap
