#pragma once

// Ground-truth oracles and perturbation-theory checks, all brute force and
// deliberately independent of the iterative solver: exhaustive subset
// enumeration, dense spectra, and a grid-refined Crawford number. Guarded
// for desk-scale inputs.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "iftrr/dense_eig.hpp"
#include "iftrr/matrix.hpp"
#include "iftrr/small_gep.hpp"
#include "iftrr/solver.hpp"

#include <json.hpp>

namespace iftrr {

// Acute angle between the lines spanned by x and y, in radians.
// Computed as atan2(sin, cos) with the sine taken from the orthogonal
// residual; acos(cos) alone cannot resolve angles below sqrt(eps).
inline double angle(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("angle: dimension mismatch");
  double nx = norm2(x), ny = norm2(y);
  if (nx == 0.0 || ny == 0.0) throw std::invalid_argument("angle: zero vector");
  std::size_t p = x.size();
  double d = dot(x, y) / (nx * ny);
  double sgn = d < 0.0 ? -1.0 : 1.0;
  double c = std::abs(d);
  Vec r(p);
  for (std::size_t i = 0; i < p; ++i) r[i] = sgn * y[i] / ny - c * x[i] / nx;
  return std::atan2(norm2(r), c);
}

inline bool support_success(const SparseVec& a, const SparseVec& b) {
  return a.p == b.p && a.support == b.support;
}

namespace detail {

inline double lambda_min(const Mat& s) {
  EigDecomp e = sym_eig(s);
  return e.values.back();
}

// Iterates subsets of {0..p-1} of the given size in lexicographic order.
inline void for_each_subset(int p, int size,
                            const std::function<void(const IndexSet&)>& fn) {
  if (size < 1 || size > p) throw std::invalid_argument("for_each_subset: bad size");
  IndexSet c(size);
  for (int i = 0; i < size; ++i) c[i] = i;
  while (true) {
    fn(c);
    int i = size - 1;
    while (i >= 0 && c[i] == p - size + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int l = i + 1; l < size; ++l) c[l] = c[l - 1] + 1;
  }
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

// Crawford number of a symmetric pair: the distance of the joint numerical
// range {(x^T A x, x^T B x) : ||x|| = 1} from the origin, equal for definite
// pairs to max_theta lambda_min(cos(theta) A + sin(theta) B). Estimated on a
// theta grid and sharpened by golden-section search; clamped at zero for
// indefinite pairs.
inline double crawford_estimate(const Mat& a, const Mat& b, int grid = 256) {
  if (a.rows != a.cols || b.rows != b.cols || a.rows != b.rows || a.rows < 1)
    throw std::invalid_argument("crawford_estimate: need square matrices of equal order");
  if (grid < 8) throw std::invalid_argument("crawford_estimate: grid too coarse");

  const double two_pi = 6.283185307179586476925286766559;
  auto g = [&](double theta) {
    Mat s(a.rows, a.cols);
    double c = std::cos(theta), sn = std::sin(theta);
    for (size_t i = 0; i < s.a.size(); ++i) s.a[i] = c * a.a[i] + sn * b.a[i];
    return detail::lambda_min(s);
  };

  double best_theta = 0.0, best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    double theta = two_pi * i / grid;
    double v = g(theta);
    if (v > best) {
      best = v;
      best_theta = theta;
    }
  }

  // Golden-section refinement on the bracketing grid cell pair.
  const double gr = 0.61803398874989484820458683436564;
  double lo = best_theta - two_pi / grid;
  double hi = best_theta + two_pi / grid;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = g(x1), f2 = g(x2);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = g(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = g(x1);
    }
  }
  best = std::max(best, std::max(f1, f2));
  return std::max(0.0, best);
}

struct OracleResult {
  double value = 0.0;
  SparseVec argvec;
  long subsets_examined = 0;
};

// Exhaustive SGEP reference: the best leading eigenvalue over all supports
// of size k (smaller effective supports arise through the cure inside each
// block solve). Ties resolve to the lexicographically smallest subset.
// Guarded to desk scale; this is a test oracle, not a solver.
inline OracleResult brute_force_sgep(const Mat& a, const Mat& b, int k,
                                     double tol3 = 1e-9) {
  const int p = a.rows;
  if (p != a.cols || b.rows != p || b.cols != p)
    throw std::invalid_argument("brute_force_sgep: need square matrices of equal order");
  if (k < 1 || k > p) throw std::invalid_argument("brute_force_sgep: need 1 <= k <= p");
  if (p > 20 || detail::binomial(p, k) > 2e5)
    throw std::invalid_argument("brute_force_sgep: instance too large for enumeration");

  OracleResult out;
  out.value = -std::numeric_limits<double>::infinity();
  detail::for_each_subset(p, k, [&](const IndexSet& j) {
    ++out.subsets_examined;
    Mat aj = principal_submatrix(a, j);
    Mat bj = principal_submatrix(b, j);
    SmallGepResult g;
    try {
      g = small_gep_leading(aj, bj, tol3);
    } catch (const std::runtime_error&) {
      return;  // block fully B-degenerate: no feasible direction here
    }
    if (g.rho > out.value) {
      out.value = g.rho;
      out.argvec = make_sparse(p, j, g.z);
    }
  });
  if (!std::isfinite(out.value))
    throw std::runtime_error("brute_force_sgep: every block was B-degenerate");
  return out;
}

struct EtaPair {
  double eta2 = 0.0;  // max over |J| <= s of the second eigenvalue of (A_J, B_J)
  double eta1 = 0.0;  // max of the first, over |J| <= s with |J ∩ S| <= ell
};

// Restricted-spectrum envelopes: eta2 bounds what any second Ritz direction
// can reach on supports up to size s; eta1 does the same for leading values
// on supports sharing at most ell indices with a reference support.
inline EtaPair eta_oracle(const Mat& a, const Mat& b, int s, int ell,
                          const IndexSet& supp_v1, double tol3 = 1e-9) {
  const int p = a.rows;
  if (p != a.cols || b.rows != p || b.cols != p)
    throw std::invalid_argument("eta_oracle: need square matrices of equal order");
  if (s < 1 || s > p) throw std::invalid_argument("eta_oracle: need 1 <= s <= p");
  if (ell < 0) throw std::invalid_argument("eta_oracle: ell must be non-negative");
  if (p > 14) throw std::invalid_argument("eta_oracle: instance too large for enumeration");

  EtaPair out;
  out.eta2 = -std::numeric_limits<double>::infinity();
  out.eta1 = -std::numeric_limits<double>::infinity();
  for (int size = 1; size <= s; ++size) {
    detail::for_each_subset(p, size, [&](const IndexSet& j) {
      Vec vals;
      try {
        vals = small_gep_values(principal_submatrix(a, j), principal_submatrix(b, j),
                                tol3);
      } catch (const std::runtime_error&) {
        return;
      }
      if (vals.size() >= 2) out.eta2 = std::max(out.eta2, vals[1]);
      int overlap = 0;
      for (int idx : j)
        if (std::binary_search(supp_v1.begin(), supp_v1.end(), idx)) ++overlap;
      if (overlap <= ell) out.eta1 = std::max(out.eta1, vals[0]);
    });
  }
  return out;
}

// One perturbation-theory check: whether a measured quantity respects its
// proven bound, with the slack left over.
struct Report {
  std::string check;
  bool applicable = false;
  double bound = 0.0;
  double measured = 0.0;
  double slack = 0.0;  // bound - measured; non-negative iff the bound holds
  std::string note;
};

inline nlohmann::json to_json(const Report& r) {
  return nlohmann::json{{"check", r.check},     {"applicable", r.applicable},
                        {"bound", r.bound},     {"measured", r.measured},
                        {"slack", r.slack},     {"note", r.note}};
}

namespace detail {

// Spectrum of (A, B) with B SPD via Cholesky reduction; throws if B is not.
inline Vec pencil_values_chol(const Mat& a, const Mat& b) {
  Mat l = cholesky_lower(b);
  Mat w = forward_solve(l, symmetrized(a));
  Mat c = transpose(forward_solve(l, transpose(w)));
  return sym_eig(symmetrized(c)).values;
}

inline double spectral_norm(const Mat& s) {
  EigDecomp e = sym_eig(symmetrized(s));
  return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
}

}  // namespace detail

// Eigenvalue stability under perturbation (E, F): every generalized
// eigenvalue moves by at most arctan(eps / c(A, B)) on the arctan scale,
// where eps = sqrt(||E||^2 + ||F||^2), provided eps stays below the
// Crawford number. Sorted spectra are paired index by index.
inline Report lemma1_check(const Mat& a, const Mat& b, const Mat& e, const Mat& f) {
  Report rep;
  rep.check = "eigenvalue-arctan-stability";
  const int n = a.rows;
  if (a.cols != n || b.rows != n || b.cols != n || e.rows != n || e.cols != n ||
      f.rows != n || f.cols != n)
    throw std::invalid_argument("lemma1_check: matrix dimensions disagree");
  double eps = std::sqrt(std::pow(detail::spectral_norm(e), 2) +
                         std::pow(detail::spectral_norm(f), 2));
  double c = crawford_estimate(a, b);
  if (!(eps < c)) {
    rep.applicable = false;
    rep.note = "perturbation eps=" + std::to_string(eps) +
               " not below Crawford number c=" + std::to_string(c);
    return rep;
  }

  Mat at = a, bt = b;
  for (size_t i = 0; i < at.a.size(); ++i) at.a[i] += e.a[i];
  for (size_t i = 0; i < bt.a.size(); ++i) bt.a[i] += f.a[i];

  Vec lam, lam_t;
  try {
    lam = detail::pencil_values_chol(a, b);
    lam_t = detail::pencil_values_chol(at, bt);
  } catch (const std::runtime_error& ex) {
    rep.applicable = false;
    rep.note = std::string("spectra unavailable: ") + ex.what();
    return rep;
  }

  rep.applicable = true;
  rep.bound = std::atan(eps / c);
  rep.measured = 0.0;
  for (size_t i = 0; i < lam.size(); ++i)
    rep.measured = std::max(rep.measured, std::abs(std::atan(lam[i]) - std::atan(lam_t[i])));
  rep.slack = rep.bound - rep.measured;
  rep.note = "eps=" + std::to_string(eps) + ", crawford=" + std::to_string(c);
  return rep;
}

// Eigenvector stability on a fixed support: with (A_J, B_J) the clean
// blocks, (At_J, Bt_J) their perturbed versions carrying the leading pair
// (rho, v), the sine of the angle between v and the clean leading
// eigenvector is bounded by (||Bt_J|| delta + sqrt(1 + rho^2) eps_J) / g.
// Here delta = (1 + rho^2) eps_J / (c_J - |rho| eps_J), eps_J the joint
// perturbation norm on the block, c_J the block Crawford number, and g the
// smallest nonzero singular value of At_J - rho Bt_J. The multiplier on the
// second term uses mu = rho, the perturbed eigenvalue (interpretation noted
// in the report).
inline Report theorem3_bound_check(const Mat& a_j, const Mat& b_j, const Mat& at_j,
                                   const Mat& bt_j, double rho_t, const Vec& v_t) {
  Report rep;
  rep.check = "truncated-eigenvector-angle";
  const int nj = a_j.rows;
  if (nj != a_j.cols || b_j.rows != nj || at_j.rows != nj || bt_j.rows != nj ||
      static_cast<int>(v_t.size()) != nj)
    throw std::invalid_argument("theorem3_bound_check: block dimensions disagree");

  Mat e = at_j, f = bt_j;
  for (size_t i = 0; i < e.a.size(); ++i) e.a[i] -= a_j.a[i];
  for (size_t i = 0; i < f.a.size(); ++i) f.a[i] -= b_j.a[i];
  double eps_j = std::sqrt(std::pow(detail::spectral_norm(e), 2) +
                           std::pow(detail::spectral_norm(f), 2));
  double c_j = crawford_estimate(a_j, b_j);
  if (!(c_j - std::abs(rho_t) * eps_j > 0.0)) {
    rep.applicable = false;
    rep.note = "c_J - |rho| eps_J not positive";
    return rep;
  }

  // Clean leading eigenvector on the block; simple-eigenvalue gap required.
  SmallGepResult clean = small_gep_leading(a_j, b_j, 1e-12);
  Vec clean_vals = small_gep_values(a_j, b_j, 1e-12);
  if (clean_vals.size() >= 2 &&
      clean_vals[0] - clean_vals[1] < 1e-10 * std::max(1.0, std::abs(clean_vals[0]))) {
    rep.applicable = false;
    rep.note = "leading eigenvalue of the clean block is not simple";
    return rep;
  }

  // g: smallest nonzero singular value of the shifted perturbed block. The
  // smallest singular value is the (near) zero at the eigenpair itself.
  Mat shifted = at_j;
  for (size_t i = 0; i < shifted.a.size(); ++i)
    shifted.a[i] -= rho_t * bt_j.a[i];
  EigDecomp se = sym_eig(shifted);
  Vec svals(se.values.size());
  for (size_t i = 0; i < svals.size(); ++i) svals[i] = std::abs(se.values[i]);
  std::sort(svals.begin(), svals.end());
  if (svals.size() < 2) {
    rep.applicable = false;
    rep.note = "block too small for a nonzero singular value";
    return rep;
  }
  double g = svals[1];
  if (g <= 0.0) {
    rep.applicable = false;
    rep.note = "shifted block has no nonzero singular value";
    return rep;
  }

  double delta = (1.0 + rho_t * rho_t) * eps_j / (c_j - std::abs(rho_t) * eps_j);
  double mu = rho_t;
  rep.applicable = true;
  rep.bound = (detail::spectral_norm(bt_j) * delta +
               std::sqrt(1.0 + mu * mu) * eps_j) / g;
  rep.measured = std::sin(angle(v_t, clean.z));
  rep.slack = rep.bound - rep.measured;
  rep.note = "mu taken as the perturbed leading eigenvalue rho";
  return rep;
}

}  // namespace iftrr
