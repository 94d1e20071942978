#pragma once

// Householder QR with column pivoting. Used to detect the numerical rank of
// PSD blocks before Cholesky: the pivoted R diagonal is non-negative and
// non-increasing, so tiny trailing entries flag dependent columns.

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "iftrr/matrix.hpp"

namespace iftrr {

struct PivotedQr {
  std::vector<int> perm;  // perm[i] = source column placed at position i
  Mat q;                  // orthogonal, rows x rows
  Mat r;                  // upper triangular, diag >= 0 and non-increasing
};

// Factorizes M P = Q R, choosing at each step the remaining column of
// largest norm (ties by lowest index). The reflector sign is chosen so that
// every diagonal of R comes out non-negative.
inline PivotedQr pivoted_qr(const Mat& m_in) {
  if (m_in.rows < 1 || m_in.cols < 1)
    throw std::invalid_argument("pivoted_qr: empty matrix");
  const int n = m_in.rows, nc = m_in.cols;
  Mat r = m_in;
  Mat q = Mat::identity(n);
  std::vector<int> perm(nc);
  std::iota(perm.begin(), perm.end(), 0);

  const int steps = std::min(n, nc);
  Vec hv(n);
  for (int j = 0; j < steps; ++j) {
    // Column norms are recomputed, not downdated; blocks are small enough
    // that the extra work is irrelevant and it avoids downdating drift.
    int piv = j;
    double best = -1.0;
    for (int c = j; c < nc; ++c) {
      double s = 0.0;
      for (int i = j; i < n; ++i) s += r(i, c) * r(i, c);
      if (s > best) {
        best = s;
        piv = c;
      }
    }
    if (piv != j) {
      for (int i = 0; i < n; ++i) std::swap(r(i, j), r(i, piv));
      std::swap(perm[j], perm[piv]);
    }

    double colnorm = std::sqrt(best);
    if (colnorm == 0.0) break;  // remaining block is exactly zero

    // Reflector mapping the column to +colnorm * e_j; the leading entry of
    // the Householder vector is formed cancellation-free.
    double x0 = r(j, j);
    double v0;
    if (x0 >= 0.0) {
      double tail = best - x0 * x0;
      v0 = -(tail > 0.0 ? tail : 0.0) / (x0 + colnorm);
    } else {
      v0 = x0 - colnorm;
    }
    hv[j] = v0;
    double vsq = v0 * v0;
    for (int i = j + 1; i < n; ++i) {
      hv[i] = r(i, j);
      vsq += hv[i] * hv[i];
    }
    if (vsq > 0.0) {
      double tau = 2.0 / vsq;
      for (int c = j; c < nc; ++c) {
        double s = 0.0;
        for (int i = j; i < n; ++i) s += hv[i] * r(i, c);
        s *= tau;
        for (int i = j; i < n; ++i) r(i, c) -= s * hv[i];
      }
      for (int rr = 0; rr < n; ++rr) {
        double s = 0.0;
        for (int i = j; i < n; ++i) s += q(rr, i) * hv[i];
        s *= tau;
        for (int i = j; i < n; ++i) q(rr, i) -= s * hv[i];
      }
    }
    r(j, j) = colnorm;
    for (int i = j + 1; i < n; ++i) r(i, j) = 0.0;
  }

  return {std::move(perm), std::move(q), std::move(r)};
}

}  // namespace iftrr
