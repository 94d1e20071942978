#pragma once

// Matrix-free pencil operators. A pencil (A, B) is exposed through two
// closures per side: a full matrix-vector product and extraction of a
// principal submatrix on an index set. Everything downstream (Krylov,
// truncation, polish) talks only to this interface, so explicit dense,
// explicit sparse, and data-backed covariance pencils are interchangeable.

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "iftrr/matrix.hpp"
#include "iftrr/rng.hpp"

namespace iftrr {

enum class OperatorKind { ExplicitDense, ExplicitSparse, DataBacked };

using ApplyFn = std::function<Vec(const Vec&)>;
using SubmatrixFn = std::function<Mat(const IndexSet&)>;

// One symmetric operator of order p.
struct SingleOperator {
  int p = 0;
  ApplyFn apply;
  SubmatrixFn submatrix;
};

struct PairOperator {
  int p = 0;
  OperatorKind kind = OperatorKind::ExplicitDense;
  ApplyFn apply_a, apply_b;
  SubmatrixFn submatrix_a, submatrix_b;
};

inline PairOperator make_pair_operator(SingleOperator a, SingleOperator b,
                                       OperatorKind kind) {
  if (a.p != b.p || a.p <= 0)
    throw std::invalid_argument("make_pair_operator: mismatched operator orders");
  PairOperator op;
  op.p = a.p;
  op.kind = kind;
  op.apply_a = std::move(a.apply);
  op.apply_b = std::move(b.apply);
  op.submatrix_a = std::move(a.submatrix);
  op.submatrix_b = std::move(b.submatrix);
  return op;
}

// (A - rho B) v, the shifted product driving the Krylov sweep.
inline Vec apply_shifted(const PairOperator& op, double rho, const Vec& v) {
  Vec y = op.apply_a(v);
  Vec z = op.apply_b(v);
  axpy(-rho, z, y);
  return y;
}

// Principal submatrices (A_J, B_J) on a validated index set.
inline std::pair<Mat, Mat> extract_submatrices(const PairOperator& op,
                                               const IndexSet& j) {
  check_index_set(j, op.p);
  return {op.submatrix_a(j), op.submatrix_b(j)};
}

// Lower estimate of the spectral norm by power iteration from a seeded
// start: the estimate || M x || with unit x never exceeds ||M||_2, and a
// fixed seed makes it reproducible. A zero operator reports 0.
template <class F>
double estimate_norm(F&& apply, int p, int iters, std::uint64_t seed) {
  if (p <= 0 || iters < 1) throw std::invalid_argument("estimate_norm: bad arguments");
  Rng rng(seed);
  Vec x = normal_vec(p, rng);
  if (norm2(x) == 0.0) x[0] = 1.0;
  normalize(x);
  double est = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec y = apply(x);
    double ny = norm2(y);
    est = ny;
    if (ny == 0.0) return 0.0;
    scale(y, 1.0 / ny);
    x = std::move(y);
  }
  return est;
}

// ---- concrete operator kinds ----

inline SingleOperator dense_operator(Mat m) {
  if (m.rows != m.cols || m.rows < 1)
    throw std::invalid_argument("dense_operator: matrix must be square and nonempty");
  if (!is_symmetric(m))
    throw std::invalid_argument("dense_operator: matrix is not symmetric");
  auto sm = std::make_shared<const Mat>(std::move(m));
  SingleOperator op;
  op.p = sm->rows;
  op.apply = [sm](const Vec& v) { return matvec(*sm, v); };
  op.submatrix = [sm](const IndexSet& j) { return principal_submatrix(*sm, j); };
  return op;
}

inline SingleOperator identity_operator(int p) {
  if (p < 1) throw std::invalid_argument("identity_operator: p must be positive");
  SingleOperator op;
  op.p = p;
  op.apply = [](const Vec& v) { return v; };
  op.submatrix = [](const IndexSet& j) {
    return Mat::identity(static_cast<int>(j.size()));
  };
  return op;
}

inline PairOperator make_dense_pair(Mat a, Mat b) {
  if (a.rows != b.rows) throw std::invalid_argument("make_dense_pair: order mismatch");
  return make_pair_operator(dense_operator(std::move(a)), dense_operator(std::move(b)),
                            OperatorKind::ExplicitDense);
}

// Symmetric sparse matrix, CSR with both triangles stored.
struct SparseSym {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  // Builds from (i, j, v) triplets; duplicates are summed. When
  // mirror_lower is set, off-diagonal entries are reflected (coordinate
  // files that store one triangle).
  static SparseSym from_triplets(int n, std::vector<std::tuple<int, int, double>> t,
                                 bool mirror_lower) {
    if (n < 1) throw std::invalid_argument("SparseSym: order must be positive");
    if (mirror_lower) {
      size_t base = t.size();
      for (size_t k = 0; k < base; ++k) {
        auto [i, j, v] = t[k];
        if (i != j) t.emplace_back(j, i, v);
      }
    }
    for (auto& [i, j, v] : t) {
      if (i < 0 || i >= n || j < 0 || j >= n)
        throw std::out_of_range("SparseSym: triplet index out of range");
    }
    std::sort(t.begin(), t.end(), [](const auto& x, const auto& y) {
      return std::tie(std::get<0>(x), std::get<1>(x)) <
             std::tie(std::get<0>(y), std::get<1>(y));
    });
    SparseSym s;
    s.n = n;
    s.row_ptr.assign(n + 1, 0);
    int prev_i = -1, prev_j = -1;
    for (size_t k = 0; k < t.size(); ++k) {
      auto [i, j, v] = t[k];
      if (i == prev_i && j == prev_j) {
        s.val.back() += v;
      } else {
        s.col.push_back(j);
        s.val.push_back(v);
        ++s.row_ptr[i + 1];
        prev_i = i;
        prev_j = j;
      }
    }
    for (int i = 0; i < n; ++i) s.row_ptr[i + 1] += s.row_ptr[i];
    return s;
  }

  Vec apply(const Vec& v) const {
    Vec y(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * v[col[k]];
      y[i] = s;
    }
    return y;
  }

  Mat submatrix(const IndexSet& j) const {
    Mat b(static_cast<int>(j.size()), static_cast<int>(j.size()));
    for (size_t r = 0; r < j.size(); ++r) {
      int i = j[r];
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        auto it = std::lower_bound(j.begin(), j.end(), col[k]);
        if (it != j.end() && *it == col[k])
          b(static_cast<int>(r), static_cast<int>(it - j.begin())) = val[k];
      }
    }
    return b;
  }
};

inline SingleOperator sparse_operator(SparseSym s) {
  auto sp = std::make_shared<const SparseSym>(std::move(s));
  SingleOperator op;
  op.p = sp->n;
  op.apply = [sp](const Vec& v) { return sp->apply(v); };
  op.submatrix = [sp](const IndexSet& j) { return sp->submatrix(j); };
  return op;
}

// Sample covariance of the rows of X (n x p), never materialized: the
// product is u = (1/n) Xc^T (Xc v) with Xc the centered data, computed as
// w = X v - (xbar . v) 1 and u = (1/n)(X^T w - (1^T w) xbar). O(np) per
// apply, O(n s^2) per submatrix.
inline SingleOperator covariance_operator(Mat x, bool centered = true) {
  if (x.rows < 1 || x.cols < 1)
    throw std::invalid_argument("covariance_operator: empty data matrix");
  const int n = x.rows, p = x.cols;
  Vec mean(p, 0.0);
  if (centered) {
    for (int i = 0; i < n; ++i) {
      const double* r = x.row(i);
      for (int j = 0; j < p; ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= n;
  }
  auto sx = std::make_shared<const Mat>(std::move(x));
  auto sm = std::make_shared<const Vec>(std::move(mean));
  SingleOperator op;
  op.p = p;
  op.apply = [sx, sm, n, p](const Vec& v) {
    if (static_cast<int>(v.size()) != p)
      throw std::invalid_argument("covariance apply: dimension mismatch");
    double mv = dot(*sm, v);
    Vec w(n);
    for (int i = 0; i < n; ++i) {
      const double* r = sx->row(i);
      double s = 0.0;
      for (int j = 0; j < p; ++j) s += r[j] * v[j];
      w[i] = s - mv;
    }
    double wsum = 0.0;
    for (double e : w) wsum += e;
    Vec u(p, 0.0);
    for (int i = 0; i < n; ++i) {
      double wi = w[i];
      if (wi == 0.0) continue;
      const double* r = sx->row(i);
      for (int j = 0; j < p; ++j) u[j] += wi * r[j];
    }
    for (int j = 0; j < p; ++j) u[j] = (u[j] - wsum * (*sm)[j]) / n;
    return u;
  };
  op.submatrix = [sx, sm, n](const IndexSet& j) {
    const int s = static_cast<int>(j.size());
    Mat cols(n, s);  // centered columns restricted to j
    for (int i = 0; i < n; ++i) {
      const double* r = sx->row(i);
      for (int c = 0; c < s; ++c) cols(i, c) = r[j[c]] - (*sm)[j[c]];
    }
    Mat b(s, s);
    for (int a = 0; a < s; ++a) {
      for (int c = a; c < s; ++c) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += cols(i, a) * cols(i, c);
        b(a, c) = acc / n;
        b(c, a) = b(a, c);
      }
    }
    return b;
  };
  return op;
}

}  // namespace iftrr
