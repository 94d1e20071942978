#pragma once

// Orthonormal Krylov basis of span{v, Tv, ..., T^{m-1}v} for the shifted
// operator T = A - rho B, built by Arnoldi with modified Gram-Schmidt plus
// one full reorthogonalization pass per column.

#include <stdexcept>
#include <vector>

#include "iftrr/matrix.hpp"
#include "iftrr/operators.hpp"

namespace iftrr {

struct KrylovBasis {
  std::vector<Vec> cols;  // orthonormal columns, length p each
  bool breakdown = false;
  int breakdown_step = -1;  // column index at which the candidate vanished
  int mvp_count = 0;        // shifted products actually performed

  int dim() const { return static_cast<int>(cols.size()); }
};

// Builds up to m basis vectors. Early termination (candidate norm below
// 1e-12 of its pre-orthogonalization norm) flags breakdown and returns the
// columns found so far; the invariant subspace they span is exact.
inline KrylovBasis arnoldi_basis(const PairOperator& op, double rho, const Vec& v,
                                 int m) {
  if (static_cast<int>(v.size()) != op.p)
    throw std::invalid_argument("arnoldi_basis: start vector has wrong dimension");
  if (m < 1 || m > op.p)
    throw std::invalid_argument("arnoldi_basis: m must satisfy 1 <= m <= p");

  KrylovBasis kb;
  Vec q0 = v;
  if (norm2(q0) == 0.0)
    throw std::invalid_argument("arnoldi_basis: start vector is zero");
  normalize(q0);
  kb.cols.push_back(std::move(q0));

  for (int j = 1; j < m; ++j) {
    Vec w = apply_shifted(op, rho, kb.cols.back());
    ++kb.mvp_count;
    double pre = norm2(w);
    for (const Vec& q : kb.cols) axpy(-dot(q, w), q, w);
    for (const Vec& q : kb.cols) axpy(-dot(q, w), q, w);  // second pass
    double post = norm2(w);
    if (pre == 0.0 || post < 1e-12 * pre) {
      kb.breakdown = true;
      kb.breakdown_step = j;
      return kb;
    }
    scale(w, 1.0 / post);
    kb.cols.push_back(std::move(w));
  }
  return kb;
}

}  // namespace iftrr
