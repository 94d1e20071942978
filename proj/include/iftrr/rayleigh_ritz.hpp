#pragma once

// Rayleigh-Ritz extraction: project the pencil onto a Krylov basis and lift
// the leading eigenvector of the small projected pencil back to R^p.

#include <stdexcept>

#include "iftrr/krylov.hpp"
#include "iftrr/matrix.hpp"
#include "iftrr/operators.hpp"
#include "iftrr/small_gep.hpp"

namespace iftrr {

struct RitzPair {
  double value = 0.0;
  Vec vector;  // unit norm, length p
};

// Leading Ritz pair of (Q^T A Q, Q^T B Q). Costs 2 * dim(Q) full products.
// Both projections are symmetrized before the small solve; a B-projection
// without positive directions surfaces as a degenerate-pencil error.
inline RitzPair ritz_leading(const KrylovBasis& kb, const PairOperator& op,
                             double tol3 = 1e-9) {
  const int m = kb.dim();
  if (m < 1) throw std::invalid_argument("ritz_leading: empty basis");

  Mat pa(m, m), pb(m, m);
  for (int j = 0; j < m; ++j) {
    Vec za = op.apply_a(kb.cols[j]);
    Vec zb = op.apply_b(kb.cols[j]);
    for (int i = 0; i < m; ++i) {
      pa(i, j) = dot(kb.cols[i], za);
      pb(i, j) = dot(kb.cols[i], zb);
    }
  }
  pa = symmetrized(pa);
  pb = symmetrized(pb);

  SmallGepResult g;
  try {
    g = small_gep_leading(pa, pb, tol3);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("ritz_leading: projected pencil is B-degenerate");
  }

  RitzPair out;
  out.value = g.rho;
  out.vector.assign(op.p, 0.0);
  for (int j = 0; j < m; ++j) axpy(g.z[j], kb.cols[j], out.vector);
  normalize(out.vector);
  return out;
}

}  // namespace iftrr
