#pragma once

// Independent reference computations for the test suite. Nothing here calls
// the library's eigen or QR kernels: eigenvalues come from sign changes of
// det(A - t B) with the determinant evaluated by partially pivoted LU, so
// agreement with the library is meaningful evidence, not a tautology.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "iftrr/matrix.hpp"
#include "iftrr/operators.hpp"
#include "iftrr/rng.hpp"

namespace oracle {

using iftrr::IndexSet;
using iftrr::Mat;
using iftrr::Vec;

inline double lu_det(Mat m) {
  if (m.rows != m.cols) throw std::invalid_argument("lu_det: not square");
  const int n = m.rows;
  double det = 1.0;
  for (int j = 0; j < n; ++j) {
    int piv = j;
    for (int i = j + 1; i < n; ++i)
      if (std::abs(m(i, j)) > std::abs(m(piv, j))) piv = i;
    if (m(piv, j) == 0.0) return 0.0;
    if (piv != j) {
      for (int c = 0; c < n; ++c) std::swap(m(j, c), m(piv, c));
      det = -det;
    }
    det *= m(j, j);
    for (int i = j + 1; i < n; ++i) {
      double f = m(i, j) / m(j, j);
      for (int c = j; c < n; ++c) m(i, c) -= f * m(j, c);
    }
  }
  return det;
}

namespace detail {

// Roots of f(t) = det(A - t B) on [lo, hi] by sign-change scan + bisection.
// Valid for symmetric pencils with B SPD (n real roots, f of one sign
// between consecutive roots). Retries on finer grids before giving up, so a
// missed close pair fails loudly instead of silently.
inline Vec charpoly_roots(const Mat& a, const Mat& b, double lo, double hi) {
  const int n = a.rows;
  auto f = [&](double t) {
    Mat m = a;
    for (size_t i = 0; i < m.a.size(); ++i) m.a[i] -= t * b.a[i];
    return lu_det(m);
  };
  for (int grid = 4000; grid <= 256000; grid *= 4) {
    Vec roots;
    double prev_t = lo, prev_f = f(lo);
    for (int i = 1; i <= grid; ++i) {
      double t = lo + (hi - lo) * i / grid;
      double ft = f(t);
      if (prev_f == 0.0) {
        roots.push_back(prev_t);
      } else if (ft != 0.0 && ((prev_f < 0) != (ft < 0))) {
        double x0 = prev_t, x1 = t, f0 = prev_f;
        for (int it = 0; it < 200; ++it) {
          double xm = 0.5 * (x0 + x1);
          double fm = f(xm);
          if (fm == 0.0 || x1 - x0 < 1e-14 * std::max(1.0, std::abs(xm))) {
            x0 = x1 = xm;
            break;
          }
          if ((fm < 0) == (f0 < 0)) {
            x0 = xm;
            f0 = fm;
          } else {
            x1 = xm;
          }
        }
        roots.push_back(0.5 * (x0 + x1));
      }
      prev_t = t;
      prev_f = ft;
    }
    if (static_cast<int>(roots.size()) == n) {
      std::sort(roots.begin(), roots.end(), std::greater<double>());
      return roots;  // descending, to match the library convention
    }
  }
  throw std::runtime_error("charpoly_roots: could not isolate all roots");
}

}  // namespace detail

// All eigenvalues of a symmetric matrix, descending.
inline Vec sym_eigs(const Mat& s) {
  const int n = s.rows;
  double r = 0.0;  // Gershgorin radius bound
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(s(i, j));
    r = std::max(r, row);
  }
  r = r + 1.0;
  return detail::charpoly_roots(s, Mat::identity(n), -r, r);
}

// All eigenvalues of (A, B) with B SPD, descending. The range bound uses
// max|eig(A)| / min eig(B), both from this oracle.
inline Vec pencil_eigs(const Mat& a, const Mat& b) {
  Vec be = sym_eigs(b);
  double bmin = be.back();
  if (bmin <= 0.0) throw std::invalid_argument("pencil_eigs: B is not positive definite");
  Vec ae = sym_eigs(a);
  double amax = std::max(std::abs(ae.front()), std::abs(ae.back()));
  double r = amax / bmin + 1.0;
  return detail::charpoly_roots(a, b, -r, r);
}

// Leading eigenvalue of a 2x2 pencil in closed form (B SPD).
inline double pencil_leading_2x2(const Mat& a, const Mat& b) {
  double alpha = b(0, 0) * b(1, 1) - b(0, 1) * b(0, 1);
  double mid = a(0, 0) * b(1, 1) + a(1, 1) * b(0, 0) - 2.0 * a(0, 1) * b(0, 1);
  double gamma = a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
  if (alpha <= 0.0) throw std::invalid_argument("pencil_leading_2x2: B not definite");
  double disc = mid * mid - 4.0 * alpha * gamma;
  if (disc < 0.0) disc = 0.0;
  return (mid + std::sqrt(disc)) / (2.0 * alpha);
}

// Dense matrix of a matrix-free operator, one unit vector at a time.
inline Mat densify(const iftrr::ApplyFn& apply, int p) {
  Mat m(p, p);
  for (int j = 0; j < p; ++j) {
    Vec e(p, 0.0);
    e[j] = 1.0;
    Vec col = apply(e);
    for (int i = 0; i < p; ++i) m(i, j) = col[i];
  }
  return m;
}

inline Mat rand_mat(int rows, int cols, iftrr::Rng& rng, double scale = 1.0) {
  Mat m(rows, cols);
  for (double& e : m.a) e = scale * rng.normal();
  return m;
}

inline Mat rand_sym(int n, iftrr::Rng& rng, double scale = 1.0) {
  Mat m = rand_mat(n, n, rng, scale);
  return iftrr::symmetrized(m);
}

// G^T G / n + floor * I: SPD with smallest eigenvalue at least floor.
inline Mat rand_spd(int n, iftrr::Rng& rng, double floor = 0.1) {
  Mat g = rand_mat(n, n, rng);
  Mat s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += g(k, i) * g(k, j);
      s(i, j) = acc / n;
    }
  for (int i = 0; i < n; ++i) s(i, i) += floor;
  return s;
}

}  // namespace oracle
