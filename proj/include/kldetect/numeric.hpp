#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kldetect/error.hpp"

namespace kldetect {

// compensated summation; keeps reductions stable to ~1e-16 regardless of order
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }

  double value() const { return sum; }
};

inline double kahan_total(std::span<const double> values) {
  KahanSum s;
  for (double v : values) s.add(v);
  return s.value();
}

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return kahan_total(values) / static_cast<double>(values.size());
}

// population variance (divides by n)
inline double variance_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mu = mean_of(values);
  KahanSum s;
  for (double v : values) s.add((v - mu) * (v - mu));
  return s.value() / static_cast<double>(values.size());
}

// In-place Cholesky solve of A x = b for symmetric positive-definite A
// (row-major n x n). Returns false if a pivot is not positive.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, size_t n) {
  for (size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / d;
    }
  }
  // forward: L y = b
  for (size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  // backward: L^T x = y
  for (size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * b[k];
    b[ii] = v / a[ii * n + ii];
  }
  return true;
}

// Cholesky solve with escalating diagonal jitter for near-singular systems.
inline std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, size_t n) {
  require(a.size() == n * n && b.size() == n, ErrorCode::DimensionMismatch,
          "solve_spd: matrix/vector sizes disagree");
  double scale = 0.0;
  for (size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
  if (scale == 0.0) scale = 1.0;
  for (double jitter = 0.0;; jitter = (jitter == 0.0 ? 1e-12 * scale : jitter * 100.0)) {
    std::vector<double> aj = a;
    std::vector<double> x = b;
    for (size_t i = 0; i < n; ++i) aj[i * n + i] += jitter;
    if (cholesky_solve(aj, x, n)) return x;
    if (jitter > scale) fail(ErrorCode::InvalidArgument, "solve_spd: matrix is not positive definite");
  }
}

}  // namespace kldetect
