#pragma once

// Support selection by eigenvalue increments. Candidate supports are the
// magnitude-sorted prefixes of a direction w; the selected size is the
// smallest s in [s1, s2] whose truncated leading eigenvalue rho_s sits
// within tolerance of rho_{s2}. Because rho_s is non-decreasing in s, the
// smallest qualifying s is found by bisection with a ceiling midpoint.

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "iftrr/matrix.hpp"
#include "iftrr/operators.hpp"
#include "iftrr/small_gep.hpp"

namespace iftrr {

// Permutation of 0..p-1 by descending |w|, ties by ascending index.
inline std::vector<int> sort_support(const Vec& w) {
  std::vector<int> perm(w.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int i, int j) {
    return std::abs(w[i]) > std::abs(w[j]);
  });
  return perm;
}

struct ProbePoint {
  int s = 0;
  double rho = 0.0;
};

struct TruncationResult {
  int s = 0;        // selected support size
  IndexSet j;       // the selected support, ascending
  double rho = 0.0; // leading eigenvalue on that support
  Vec z;            // unit eigenvector in block coordinates (aligned with j)
  std::vector<ProbePoint> probes;  // every (s, rho_s) evaluated, by s
};

// Increment criterion: the per-step form compares against (s2 - s) * tol
// (one tolerance per remaining step), the plain form against tol alone.
enum class IncrementRule { PerStep, Plain };

struct TruncTol {
  bool relative = true;  // scale by max(1, |rho_{s2}|)
  double value = 1e-4;
};

namespace detail {

struct ProbeEval {
  bool ok = false;       // false: block was fully B-degenerate
  double rho = -std::numeric_limits<double>::infinity();
  IndexSet j;
  Vec z;
};

class PrefixProber {
 public:
  PrefixProber(const PairOperator& op, const std::vector<int>& perm, double tol3)
      : op_(op), perm_(perm), tol3_(tol3) {
    if (static_cast<int>(perm.size()) != op.p)
      throw std::invalid_argument("truncation: permutation length must equal p");
  }

  const ProbeEval& eval(int s) {
    auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
    ProbeEval pe;
    pe.j.assign(perm_.begin(), perm_.begin() + s);
    std::sort(pe.j.begin(), pe.j.end());
    auto [a, b] = extract_submatrices(op_, pe.j);
    try {
      SmallGepResult r = small_gep_leading(a, b, tol3_);
      pe.ok = true;
      pe.rho = r.rho;
      pe.z = std::move(r.z);
    } catch (const std::runtime_error&) {
      pe.ok = false;  // rho stays -inf: no B-positive direction on this prefix
    }
    return cache_.emplace(s, std::move(pe)).first->second;
  }

  // rho_s must be non-decreasing in s (nested supports); a violation beyond
  // rounding means a broken operator, so it stops the run.
  std::vector<ProbePoint> probes_checked() const {
    std::vector<ProbePoint> out;
    for (const auto& [s, pe] : cache_) out.push_back({s, pe.rho});
    for (size_t i = 1; i < out.size(); ++i) {
      double lo = out[i - 1].rho, hi = out[i].rho;
      if (std::isfinite(lo) && hi + 1e-10 < lo)
        throw std::runtime_error(
            "truncation: rho_s decreased from s=" + std::to_string(out[i - 1].s) +
            " (" + std::to_string(lo) + ") to s=" + std::to_string(out[i].s) +
            " (" + std::to_string(hi) + ")");
    }
    return out;
  }

 private:
  const PairOperator& op_;
  const std::vector<int>& perm_;
  double tol3_;
  std::map<int, ProbeEval> cache_;
};

}  // namespace detail

// Smallest s in [s1, s2] with rho_{s2} - rho_s within tolerance, located by
// bisection over the sorted prefixes of perm. Roughly log2(s2 - s1) + 2
// small eigenproblems. The s2 prefix must be solvable; a B-degenerate
// interior prefix just fails the criterion (rho treated as -inf).
inline TruncationResult eigen_increment_select(const PairOperator& op,
                                               const std::vector<int>& perm,
                                               int s1, int s2, TruncTol tol,
                                               double tol3,
                                               IncrementRule rule = IncrementRule::PerStep) {
  if (!(1 <= s1 && s1 < s2 && s2 <= op.p))
    throw std::invalid_argument("eigen_increment_select: need 1 <= s1 < s2 <= p");
  detail::PrefixProber prober(op, perm, tol3);

  const detail::ProbeEval& top = prober.eval(s2);
  if (!top.ok)
    throw std::runtime_error("eigen_increment_select: all probed blocks B-degenerate");
  const double rho_top = top.rho;
  const double tol_eff =
      tol.relative ? tol.value * std::max(1.0, std::abs(rho_top)) : tol.value;
  auto qualifies = [&](int s, double rho_s) {
    double budget = (rule == IncrementRule::PerStep) ? (s2 - s) * tol_eff : tol_eff;
    return rho_top - rho_s <= budget;
  };

  prober.eval(s1);
  int a = s1, b = s2;
  while (b - a > 1) {
    int s = (a + b + ((a + b) % 2)) / 2;  // ceiling midpoint
    const detail::ProbeEval& pe = prober.eval(s);
    if (qualifies(s, pe.rho)) {
      b = s;
    } else {
      a = s;
    }
  }
  int chosen = qualifies(s1, prober.eval(s1).rho) ? s1 : b;

  const detail::ProbeEval& sel = prober.eval(chosen);
  if (!sel.ok)
    throw std::runtime_error("eigen_increment_select: selected block B-degenerate");

  TruncationResult out;
  out.s = chosen;
  out.j = sel.j;
  out.rho = sel.rho;
  out.z = sel.z;
  out.probes = prober.probes_checked();
  return out;
}

// rho_s for every prefix size in [s_lo, s_hi]; feeds probe exports and the
// increment-curve diagnostics. Degenerate prefixes report -inf.
inline std::vector<ProbePoint> prefix_scan(const PairOperator& op,
                                           const std::vector<int>& perm, int s_lo,
                                           int s_hi, double tol3) {
  if (!(1 <= s_lo && s_lo <= s_hi && s_hi <= op.p))
    throw std::invalid_argument("prefix_scan: need 1 <= s_lo <= s_hi <= p");
  detail::PrefixProber prober(op, perm, tol3);
  for (int s = s_lo; s <= s_hi; ++s) prober.eval(s);
  return prober.probes_checked();
}

}  // namespace iftrr
