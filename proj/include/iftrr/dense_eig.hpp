#pragma once

// Symmetric eigendecomposition by cyclic Jacobi rotations. Blocks in this
// library stay small (projected pencils, truncated supports), where Jacobi
// is simple, deterministic, and accurate to machine precision.

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "iftrr/matrix.hpp"

namespace iftrr {

struct EigDecomp {
  Vec values;   // descending
  Mat vectors;  // columns, same order as values; orthonormal
};

namespace detail {

inline double offdiag_sq(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = i + 1; j < a.cols; ++j) s += 2.0 * a(i, j) * a(i, j);
  return s;
}

}  // namespace detail

// Full eigendecomposition of a symmetric matrix. The input is symmetrized
// first so tiny assembly asymmetry cannot leak in. Throws after the sweep
// budget if the off-diagonal mass has not collapsed.
inline EigDecomp sym_eig(const Mat& s_in) {
  if (s_in.rows != s_in.cols || s_in.rows < 1)
    throw std::invalid_argument("sym_eig: matrix must be square and nonempty");
  const int n = s_in.rows;
  Mat a = symmetrized(s_in);
  Mat v = Mat::identity(n);

  if (n > 1) {
    double fro = frob_norm(a);
    double stop = std::max(1e-28 * fro * fro, 1e-300);
    const int max_sweeps = 30;
    int sweep = 0;
    while (detail::offdiag_sq(a) > stop) {
      if (++sweep > max_sweeps)
        throw std::runtime_error(
            "sym_eig: no convergence after " + std::to_string(max_sweeps) +
            " sweeps, off-diagonal residual " +
            std::to_string(std::sqrt(detail::offdiag_sq(a))));
      for (int p = 0; p < n - 1; ++p) {
        for (int q = p + 1; q < n; ++q) {
          double apq = a(p, q);
          if (std::abs(apq) <= 1e-300) continue;
          double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          double t;
          if (std::abs(theta) > 1e154) {
            t = 0.5 / theta;  // avoids theta^2 overflow
          } else {
            t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            if (theta < 0.0) t = -t;
          }
          double c = 1.0 / std::sqrt(t * t + 1.0);
          double s = t * c;

          for (int k = 0; k < n; ++k) {
            double akp = a(k, p), akq = a(k, q);
            a(k, p) = c * akp - s * akq;
            a(k, q) = s * akp + c * akq;
          }
          for (int k = 0; k < n; ++k) {
            double apk = a(p, k), aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (int k = 0; k < n; ++k) {
            double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });

  EigDecomp out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

}  // namespace iftrr
