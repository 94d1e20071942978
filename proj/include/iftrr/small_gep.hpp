#pragma once

// Dense solver for the small generalized eigenproblems that arise on
// truncated supports and projected pencils: A z = lambda B z with A
// symmetric and B PSD. A rank cure drops directions where B is numerically
// singular, then the reduced problem is solved by Cholesky + Jacobi.

#include <cmath>
#include <stdexcept>
#include <string>

#include "iftrr/dense_eig.hpp"
#include "iftrr/matrix.hpp"
#include "iftrr/pivoted_qr.hpp"

namespace iftrr {

// Lower Cholesky factor of an SPD matrix; reports the failing pivot.
inline Mat cholesky_lower(const Mat& s) {
  if (s.rows != s.cols || s.rows < 1)
    throw std::invalid_argument("cholesky_lower: matrix must be square and nonempty");
  const int n = s.rows;
  Mat l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = s(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0)
      throw std::runtime_error("cholesky_lower: non-positive pivot " +
                               std::to_string(d) + " at index " + std::to_string(j));
    double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

namespace detail {

// Solves L X = B in place (L lower triangular), column by column.
inline Mat forward_solve(const Mat& l, const Mat& b) {
  const int n = l.rows;
  Mat x = b;
  for (int c = 0; c < x.cols; ++c) {
    for (int i = 0; i < n; ++i) {
      double v = x(i, c);
      for (int k = 0; k < i; ++k) v -= l(i, k) * x(k, c);
      x(i, c) = v / l(i, i);
    }
  }
  return x;
}

// Solves L^T y = b for one vector (back substitution).
inline Vec backward_solve_t(const Mat& l, const Vec& b) {
  const int n = l.rows;
  Vec y = b;
  for (int i = n - 1; i >= 0; --i) {
    double v = y[i];
    for (int k = i + 1; k < n; ++k) v -= l(k, i) * y[k];
    y[i] = v / l(i, i);
  }
  return y;
}

}  // namespace detail

// Indices (0-based, ascending, relative to the block) along which B has
// numerically independent columns. Detection: pivoted QR of B; position i is
// kept while R(i,i) >= tol3 * R(0,0). A zero block keeps nothing.
inline IndexSet cure_indices(const Mat& b, double tol3) {
  if (b.rows != b.cols || b.rows < 1)
    throw std::invalid_argument("cure_indices: matrix must be square and nonempty");
  PivotedQr f = pivoted_qr(b);
  IndexSet kept;
  double lead = f.r(0, 0);
  if (lead <= 0.0) return kept;
  for (int i = 0; i < b.rows; ++i) {
    if (f.r(i, i) >= tol3 * lead) kept.push_back(f.perm[i]);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct SmallGepResult {
  double rho = 0.0;  // leading eigenvalue of the cured pencil
  Vec z;             // unit eigenvector, zero-padded back to the input order
  IndexSet kept;     // block-relative indices that survived the cure
};

namespace detail {

struct ReducedEig {
  EigDecomp eig;  // of L^{-1} A L^{-T}, values descending
  Mat l;          // Cholesky factor of the cured B block
  IndexSet kept;
};

inline ReducedEig reduce_pencil(const Mat& a, const Mat& b, double tol3,
                                const char* who) {
  if (a.rows != a.cols || b.rows != b.cols || a.rows != b.rows || a.rows < 1)
    throw std::invalid_argument(std::string(who) + ": blocks must be square and equal size");
  if (!is_symmetric(a, 1e-8) || !is_symmetric(b, 1e-8))
    throw std::invalid_argument(std::string(who) + ": block is not symmetric");

  IndexSet kept = cure_indices(b, tol3);
  if (kept.empty()) throw std::runtime_error(std::string(who) + ": B-degenerate block");

  Mat ak = principal_submatrix(symmetrized(a), kept);
  Mat bk = principal_submatrix(symmetrized(b), kept);
  Mat l = cholesky_lower(bk);
  // C = L^{-1} A L^{-T}, formed as two triangular solves.
  Mat w = forward_solve(l, ak);
  Mat c = transpose(forward_solve(l, transpose(w)));
  return {sym_eig(symmetrized(c)), std::move(l), std::move(kept)};
}

inline Vec padded_vector(const ReducedEig& red, int full_size, int which) {
  const int nk = static_cast<int>(red.kept.size());
  Vec y(nk);
  for (int i = 0; i < nk; ++i) y[i] = red.eig.vectors(i, which);
  Vec zk = backward_solve_t(red.l, y);
  Vec z(full_size, 0.0);
  for (int i = 0; i < nk; ++i) z[red.kept[i]] = zk[i];
  normalize(z);
  return z;
}

}  // namespace detail

// Leading eigenpair of the pencil (A, B) after curing B's rank deficiency.
// The returned vector is unit-norm in the block's original coordinates, with
// zeros on cured-out positions.
inline SmallGepResult small_gep_leading(const Mat& a, const Mat& b, double tol3) {
  detail::ReducedEig red = detail::reduce_pencil(a, b, tol3, "small_gep_leading");
  SmallGepResult out;
  out.rho = red.eig.values[0];
  out.z = detail::padded_vector(red, a.rows, 0);
  out.kept = red.kept;
  return out;
}

// All eigenvalues of the cured pencil, descending. Diagnostics only.
inline Vec small_gep_values(const Mat& a, const Mat& b, double tol3) {
  return detail::reduce_pencil(a, b, tol3, "small_gep_values").eig.values;
}

}  // namespace iftrr
