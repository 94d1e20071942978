#pragma once

// Inverse-free truncated Rayleigh-Ritz driver for the sparse generalized
// eigenvalue problem: maximize v^T A v / v^T B v subject to ||v||_0 <= k.
// Each iteration builds a Krylov basis of the shifted operator, extracts the
// leading Ritz direction, selects a support of size in [k, k + delta_k] by
// eigenvalue increments, and re-solves on that support. A final polish
// hard-truncates to k indices and solves the small pencil there.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "iftrr/krylov.hpp"
#include "iftrr/matrix.hpp"
#include "iftrr/operators.hpp"
#include "iftrr/rayleigh_ritz.hpp"
#include "iftrr/rng.hpp"
#include "iftrr/small_gep.hpp"
#include "iftrr/truncation.hpp"

namespace iftrr {

// Unit vector stored by support; indices 0-based ascending, values aligned.
struct SparseVec {
  int p = 0;
  IndexSet support;
  Vec values;
};

inline SparseVec make_sparse(int p, const IndexSet& idx, const Vec& vals) {
  if (idx.size() != vals.size())
    throw std::invalid_argument("make_sparse: index/value length mismatch");
  check_index_set(idx, p);
  SparseVec sv;
  sv.p = p;
  for (size_t i = 0; i < idx.size(); ++i) {
    if (vals[i] != 0.0) {
      sv.support.push_back(idx[i]);
      sv.values.push_back(vals[i]);
    }
  }
  return sv;
}

inline Vec to_dense(const SparseVec& sv) {
  Vec v(sv.p, 0.0);
  for (size_t i = 0; i < sv.support.size(); ++i) v[sv.support[i]] = sv.values[i];
  return v;
}

inline SparseVec sparsify(const Vec& v) {
  SparseVec sv;
  sv.p = static_cast<int>(v.size());
  for (int i = 0; i < sv.p; ++i) {
    if (v[i] != 0.0) {
      sv.support.push_back(i);
      sv.values.push_back(v[i]);
    }
  }
  return sv;
}

enum class StopReason { Residual, Stagnation, IterMax };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Residual: return "residual";
    case StopReason::Stagnation: return "stagnation";
    default: return "itermax";
  }
}

struct IFTRRConfig {
  int k = 1;           // target sparsity
  int delta_k = 20;    // support search window above k
  int m = 20;          // Krylov dimension request (clamped to p)
  TruncTol tol;        // eigenvalue-increment tolerance (relative 1e-4)
  IncrementRule rule = IncrementRule::PerStep;
  double tol1 = 0.01;  // normalized residual threshold, test (i)
  double tol2 = 1e-3;  // stagnation threshold on |rho_t - rho_{t-1}|, test (ii)
  double tol3 = 1e-9;  // rank-cure threshold for PSD blocks
  int itermax = 100;
  std::uint64_t seed = 0;
};

struct IterationRecord {
  int t = 0;
  double rho = 0.0;
  int support_size = 0;
  double residual = 0.0;   // ||(A - rho B) v|| / (||A|| + |rho| ||B||), estimated norms
  double rho_delta = 0.0;  // |rho_t - rho_{t-1}|
  int mvp = 0;             // full-size products consumed this iteration
  double elapsed_s = 0.0;
  IndexSet support;        // kept in memory for diagnostics; not in the CSV
};

struct SolveResult {
  SparseVec v_tilde;
  double rho_tilde = 0.0;
  StopReason stop_reason = StopReason::IterMax;
  std::vector<IterationRecord> trace;
  double norm_a_est = 0.0;  // cached once per solve, used by every residual test
  double norm_b_est = 0.0;
};

// Applies the stopping tests to the newest record, in priority order:
// residual, then stagnation, then the iteration cap.
inline std::optional<StopReason> converged(const std::vector<IterationRecord>& trace,
                                           const IFTRRConfig& cfg) {
  if (trace.empty()) return std::nullopt;
  const IterationRecord& r = trace.back();
  if (r.residual < cfg.tol1) return StopReason::Residual;
  if (r.rho_delta < cfg.tol2) return StopReason::Stagnation;
  if (static_cast<int>(trace.size()) >= cfg.itermax) return StopReason::IterMax;
  return std::nullopt;
}

namespace detail {

struct Polish {
  SparseVec v;
  double rho = 0.0;
};

// Keeps the k largest-magnitude entries of v (all of them if fewer) and
// solves the pencil restricted to those indices.
inline Polish polish_to_k(const PairOperator& op, const SparseVec& v, int k,
                          double tol3) {
  if (k < 1 || k > op.p) throw std::invalid_argument("final_polish: need 1 <= k <= p");
  if (v.support.empty()) throw std::invalid_argument("final_polish: empty vector");

  std::vector<int> order(v.support.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(v.values[a]) > std::abs(v.values[b]);
  });
  int take = std::min<int>(k, static_cast<int>(order.size()));
  IndexSet j;
  for (int i = 0; i < take; ++i) j.push_back(v.support[order[i]]);
  std::sort(j.begin(), j.end());

  auto [a, b] = extract_submatrices(op, j);
  SmallGepResult g = small_gep_leading(a, b, tol3);

  Polish out;
  out.rho = g.rho;
  out.v = make_sparse(op.p, j, g.z);
  return out;
}

}  // namespace detail

// Final polish: restrict to the k dominant indices of v and return the unit
// leading eigenvector of the small pencil there (k = p reproduces the
// unconstrained leading eigenvector of the cured full pencil).
inline SparseVec final_polish(const PairOperator& op, const SparseVec& v, int k,
                              double tol3) {
  return detail::polish_to_k(op, v, k, tol3).v;
}

inline SolveResult solve(const PairOperator& op, const IFTRRConfig& cfg,
                         const Vec* v0 = nullptr) {
  if (op.p < 1) throw std::invalid_argument("solve: empty operator");
  if (cfg.k < 1 || cfg.k > op.p)
    throw std::invalid_argument("solve: need 1 <= k <= p");
  if (cfg.delta_k < 0 || cfg.m < 1 || cfg.itermax < 1 || cfg.tol1 <= 0.0 ||
      cfg.tol2 < 0.0 || cfg.tol3 <= 0.0 || cfg.tol.value <= 0.0)
    throw std::invalid_argument("solve: invalid configuration");

  const int p = op.p;
  const int m = std::min(cfg.m, p);

  // Starting vector: caller-provided, or seeded normal draws re-tried until
  // the B energy is non-negligible (B is only PSD).
  Vec v;
  if (v0 != nullptr) {
    if (static_cast<int>(v0->size()) != p)
      throw std::invalid_argument("solve: v0 has wrong dimension");
    v = *v0;
    if (norm2(v) == 0.0) throw std::invalid_argument("solve: v0 is zero");
    normalize(v);
    Vec bv = op.apply_b(v);
    if (dot(v, bv) <= 1e-14)
      throw std::invalid_argument("solve: v0 has negligible B energy");
  } else {
    Rng rng(derive_seed(cfg.seed, 0));
    bool found = false;
    for (int attempt = 0; attempt < 10 && !found; ++attempt) {
      v = normal_vec(p, rng);
      double nv = norm2(v);
      if (nv == 0.0) continue;
      scale(v, 1.0 / nv);
      Vec bv = op.apply_b(v);
      found = dot(v, bv) > 1e-14;
    }
    if (!found)
      throw std::runtime_error("solve: could not draw a start vector with B energy");
  }

  SolveResult res;
  res.norm_a_est = estimate_norm(op.apply_a, p, 20, derive_seed(cfg.seed, 1));
  res.norm_b_est = estimate_norm(op.apply_b, p, 20, derive_seed(cfg.seed, 2));

  Vec av = op.apply_a(v);
  Vec bv = op.apply_b(v);
  double vbv = dot(v, bv);
  if (vbv <= 0.0) throw std::runtime_error("solve: start vector has no B energy");
  double rho = dot(v, av) / vbv;

  const int s1 = cfg.k;
  const int s2 = std::min(cfg.k + cfg.delta_k, p);

  for (int t = 1; t <= cfg.itermax; ++t) {
    auto t0 = std::chrono::steady_clock::now();

    KrylovBasis kb = arnoldi_basis(op, rho, v, m);
    RitzPair ritz = ritz_leading(kb, op, cfg.tol3);
    std::vector<int> perm = sort_support(ritz.vector);

    double rho_next;
    IndexSet j_next;
    Vec z_next;
    if (s1 < s2) {
      TruncationResult tr =
          eigen_increment_select(op, perm, s1, s2, cfg.tol, cfg.tol3, cfg.rule);
      rho_next = tr.rho;
      j_next = std::move(tr.j);
      z_next = std::move(tr.z);
    } else {  // k = p (or window collapsed): single prefix, no bisection
      j_next.assign(perm.begin(), perm.begin() + s2);
      std::sort(j_next.begin(), j_next.end());
      auto [a, b] = extract_submatrices(op, j_next);
      SmallGepResult g = small_gep_leading(a, b, cfg.tol3);
      rho_next = g.rho;
      z_next = std::move(g.z);
    }

    double rho_prev = rho;
    rho = rho_next;
    v.assign(p, 0.0);
    IndexSet supp;
    for (size_t i = 0; i < j_next.size(); ++i) {
      if (z_next[i] != 0.0) {
        v[j_next[i]] = z_next[i];
        supp.push_back(j_next[i]);
      }
    }

    Vec resid = apply_shifted(op, rho, v);
    double denom = res.norm_a_est + std::abs(rho) * res.norm_b_est;
    if (denom <= 0.0) denom = 1.0;

    IterationRecord rec;
    rec.t = t;
    rec.rho = rho;
    rec.support_size = static_cast<int>(supp.size());
    rec.residual = norm2(resid) / denom;
    rec.rho_delta = std::abs(rho - rho_prev);
    rec.mvp = kb.mvp_count + 2 * kb.dim();  // Arnoldi sweep + projection
    rec.support = std::move(supp);
    rec.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back(std::move(rec));

    if (auto stop = converged(res.trace, cfg)) {
      res.stop_reason = *stop;
      break;
    }
  }

  detail::Polish pol = detail::polish_to_k(op, sparsify(v), cfg.k, cfg.tol3);
  res.v_tilde = std::move(pol.v);
  res.rho_tilde = pol.rho;
  return res;
}

// Trace serialization used by the CLI and the experiment harness.
inline std::string trace_csv(const std::vector<IterationRecord>& trace) {
  std::ostringstream os;
  os << "t,rho,support_size,residual,rho_delta,mvp,elapsed_s\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  for (const IterationRecord& r : trace) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.elapsed_s);
    std::string el(buf);
    os << r.t << ',' << num(r.rho) << ',' << r.support_size << ',' << num(r.residual)
       << ',' << num(r.rho_delta) << ',' << r.mvp << ',' << el << '\n';
  }
  return os.str();
}

}  // namespace iftrr
