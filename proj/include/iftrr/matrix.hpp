#pragma once

// Small dense matrix / vector kernels shared by the whole library.
// Matrices are row-major, sized for pencil blocks and projected problems
// (tens of rows); data matrices (n x p) reuse the same type.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace iftrr {

using Vec = std::vector<double>;

// Sorted, strictly increasing, 0-based indices into [0, p).
using IndexSet = std::vector<int>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative dimension");
  }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
  for (double& v : x) v *= alpha;
}

// Scales x to unit 2-norm and returns the original norm; zero vectors throw.
inline double normalize(Vec& x) {
  double nrm = norm2(x);
  if (nrm == 0.0) throw std::invalid_argument("normalize: zero vector");
  scale(x, 1.0 / nrm);
  return nrm;
}

inline Vec matvec(const Mat& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.cols)
    throw std::invalid_argument("matvec: dimension mismatch");
  Vec y(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double* r = m.row(i);
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

inline Mat transpose(const Mat& m) {
  Mat t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

inline Mat matmul(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matmul: dimension mismatch");
  Mat z(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    for (int k = 0; k < x.cols; ++k) {
      double xik = x(i, k);
      if (xik == 0.0) continue;
      const double* yr = y.row(k);
      double* zr = z.row(i);
      for (int j = 0; j < y.cols; ++j) zr[j] += xik * yr[j];
    }
  }
  return z;
}

inline double max_abs(const Mat& m) {
  double v = 0.0;
  for (double e : m.a) v = std::max(v, std::abs(e));
  return v;
}

inline double frob_norm(const Mat& m) {
  double s = 0.0;
  for (double e : m.a) s += e * e;
  return std::sqrt(s);
}

// Symmetry within tol * max(1, maxAbs); used to validate user-supplied blocks.
inline bool is_symmetric(const Mat& m, double tol = 1e-12) {
  if (m.rows != m.cols) return false;
  double bound = tol * std::max(1.0, max_abs(m));
  for (int i = 0; i < m.rows; ++i)
    for (int j = i + 1; j < m.cols; ++j)
      if (std::abs(m(i, j) - m(j, i)) > bound) return false;
  return true;
}

inline Mat symmetrized(const Mat& m) {
  Mat s(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

inline void check_index_set(const IndexSet& j, int p) {
  if (j.empty()) throw std::invalid_argument("index set: empty");
  for (size_t i = 0; i < j.size(); ++i) {
    if (j[i] < 0 || j[i] >= p)
      throw std::out_of_range("index set: entry " + std::to_string(j[i]) +
                              " outside [0," + std::to_string(p) + ")");
    if (i > 0 && j[i] <= j[i - 1])
      throw std::invalid_argument("index set: not strictly increasing");
  }
}

inline Mat principal_submatrix(const Mat& m, const IndexSet& j) {
  check_index_set(j, std::min(m.rows, m.cols));
  int s = static_cast<int>(j.size());
  Mat b(s, s);
  for (int i = 0; i < s; ++i)
    for (int l = 0; l < s; ++l) b(i, l) = m(j[i], j[l]);
  return b;
}

}  // namespace iftrr
