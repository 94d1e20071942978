#pragma once

// Synthetic problem generators. Both families share the covariance
// Sigma = I_5 (x) D with D(i,j) = 0.8^|i-j|, sampled through its Cholesky
// factor block by block, so no p x p matrix is ever formed at scale.
//
//  - gen_scca: two views with a planted leading canonical pair of strength
//    0.9 on an evenly spread sparse support; pencil A = [[0, Sxy],[Syx, 0]],
//    B = blkdiag(Sxx, Syy), either population-exact or sample covariances.
//  - gen_sfda: K classes with staircase means on coordinates 2,4,...,40;
//    pencil A = between-class scatter, B = pooled within-class scatter.
//  - sir_estimators: sliced-mean covariance pencil from labeled data.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iftrr/matrix.hpp"
#include "iftrr/operators.hpp"
#include "iftrr/rng.hpp"
#include "iftrr/small_gep.hpp"
#include "iftrr/solver.hpp"

namespace iftrr {

// I_blocks (x) D with D(i,j) = base^|i-j|, assembled dense. Test and
// population use only; the samplers below never call it at scale.
inline Mat toeplitz_kron(int blocks, int block_size, double base) {
  if (blocks < 1 || block_size < 1)
    throw std::invalid_argument("toeplitz_kron: bad dimensions");
  int n = blocks * block_size;
  Mat m(n, n);
  for (int b = 0; b < blocks; ++b) {
    int off = b * block_size;
    for (int i = 0; i < block_size; ++i)
      for (int j = 0; j < block_size; ++j)
        m(off + i, off + j) = std::pow(base, std::abs(i - j));
  }
  return m;
}

struct InstanceMeta {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
  std::uint64_t seed = 0;
  std::string note;
  std::optional<Vec> discriminant;  // population direction (sfda, K = 2)
};

struct ProblemInstance {
  PairOperator op;
  std::optional<SparseVec> v1_true;
  std::optional<std::pair<Mat, Mat>> population;  // dense (A, B) when attached
  InstanceMeta meta;
};

namespace detail {

inline Mat toeplitz_block(int h) {
  Mat d(h, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) d(i, j) = std::pow(0.8, std::abs(i - j));
  return d;
}

// y = (I_blocks (x) L) x with L lower triangular (or its transpose).
inline Vec block_tri_apply(const Mat& l, int blocks, const Vec& x, bool trans) {
  const int h = l.rows;
  Vec y(static_cast<size_t>(blocks) * h, 0.0);
  for (int b = 0; b < blocks; ++b) {
    const int off = b * h;
    if (!trans) {
      for (int i = 0; i < h; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += l(i, j) * x[off + j];
        y[off + i] = s;
      }
    } else {
      for (int i = 0; i < h; ++i) {
        double s = 0.0;
        for (int j = i; j < h; ++j) s += l(j, i) * x[off + j];
        y[off + i] = s;
      }
    }
  }
  return y;
}

inline void center_columns(Mat& x) {
  const int n = x.rows, p = x.cols;
  Vec mean(p, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* r = x.row(i);
    for (int j = 0; j < p; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= n;
  for (int i = 0; i < n; ++i) {
    double* r = x.row(i);
    for (int j = 0; j < p; ++j) r[j] -= mean[j];
  }
}

// (1/n) X^T (X v) for a stored (already centered) data block.
inline Vec gram_apply(const Mat& x, const Vec& v) {
  const int n = x.rows, p = x.cols;
  Vec w(n);
  for (int i = 0; i < n; ++i) {
    const double* r = x.row(i);
    double s = 0.0;
    for (int j = 0; j < p; ++j) s += r[j] * v[j];
    w[i] = s;
  }
  Vec u(p, 0.0);
  for (int i = 0; i < n; ++i) {
    double wi = w[i];
    if (wi == 0.0) continue;
    const double* r = x.row(i);
    for (int j = 0; j < p; ++j) u[j] += wi * r[j];
  }
  for (double& e : u) e /= n;
  return u;
}

// (1/n) X[:,ja]^T Y[:,jb] for column subsets of equally tall blocks.
inline Mat gram_cross(const Mat& x, const Mat& y, const IndexSet& ja,
                      const IndexSet& jb) {
  const int n = x.rows;
  Mat m(static_cast<int>(ja.size()), static_cast<int>(jb.size()));
  for (size_t a = 0; a < ja.size(); ++a) {
    for (size_t b = 0; b < jb.size(); ++b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += x(i, ja[a]) * y(i, jb[b]);
      m(static_cast<int>(a), static_cast<int>(b)) = s / n;
    }
  }
  return m;
}

}  // namespace detail

struct SccaParams {
  int p = 0;    // total dimension (two halves of p/2); must be a multiple of 10
  int n = 0;    // sample size (ignored when population_exact)
  int s = 0;    // planted support size, even; s/2 per half
  bool approx_lowrank = false;   // add the 0.1-strength orthogonal bulk
  bool population_exact = false; // dense population pencil, no sampling noise
  bool attach_population = true; // assemble dense (A, B) when p allows
  int attach_limit = 400;        // largest p for which assembly is attempted
};

// Two-view canonical correlation instance with a planted sparse leading
// pair: population correlation 0.9 along a vector supported on indices
// 5j-4 (1-based) of each half, j = 1..s/2.
inline ProblemInstance gen_scca(const SccaParams& prm, std::uint64_t seed) {
  if (prm.p < 20 || prm.p % 10 != 0)
    throw std::invalid_argument("gen_scca: p must be a multiple of 10, at least 20");
  if (prm.s < 2 || prm.s % 2 != 0)
    throw std::invalid_argument("gen_scca: s must be even and at least 2");
  const int ph = prm.p / 2;  // half dimension
  const int h = prm.p / 10;  // Toeplitz block order; 5 blocks per half
  if (5 * (prm.s / 2 - 1) >= ph)
    throw std::invalid_argument("gen_scca: support does not fit the half dimension");
  if (!prm.population_exact && prm.n < 2)
    throw std::invalid_argument("gen_scca: need n >= 2 to sample");

  Rng rng(seed);
  Mat d = detail::toeplitz_block(h);
  Mat l = cholesky_lower(d);

  // Planted direction: vx = alpha * sum_j e_{5j-4}, normalized in the Sigma
  // inner product; the y half uses the same vector.
  Vec u(ph, 0.0);
  IndexSet supp_half;
  for (int j = 0; j < prm.s / 2; ++j) {
    u[5 * j] = 1.0;
    supp_half.push_back(5 * j);
  }
  Vec su = detail::block_tri_apply(l, 5, detail::block_tri_apply(l, 5, u, true), false);
  double alpha = 1.0 / std::sqrt(dot(u, su));
  Vec vx = u;
  scale(vx, alpha);

  // Whitened factors: K = [u_hat | U_hat], sigma = (0.9, 0.1, ..., 0.1).
  // u_hat = L^T vx is unit; the bulk columns are drawn orthonormal to it,
  // which realizes Sigma-orthonormal directions after unwhitening.
  std::vector<Vec> kx, ky;
  Vec sigma;
  {
    Vec ux = detail::block_tri_apply(l, 5, vx, true);
    double nu = norm2(ux);
    scale(ux, 1.0 / nu);  // unit up to rounding by construction
    kx.push_back(ux);
    ky.push_back(ux);
    sigma.push_back(0.9);
  }
  int rank_bulk = 0;
  if (prm.approx_lowrank) {
    rank_bulk = std::min(ph - 1, 50);
    auto grow = [&](std::vector<Vec>& basis) {
      while (static_cast<int>(basis.size()) < rank_bulk + 1) {
        Vec g = normal_vec(ph, rng);
        for (int pass = 0; pass < 2; ++pass)
          for (const Vec& q : basis) axpy(-dot(q, g), q, g);
        double ng = norm2(g);
        if (ng < 1e-8) continue;  // essentially impossible; redraw
        scale(g, 1.0 / ng);
        basis.push_back(g);
      }
    };
    grow(kx);
    grow(ky);
    for (int i = 0; i < rank_bulk; ++i) sigma.push_back(0.1);
  }

  ProblemInstance inst;
  inst.meta.name = "scca";
  inst.meta.seed = seed;
  inst.meta.params = {{"p", double(prm.p)},
                      {"n", double(prm.population_exact ? 0 : prm.n)},
                      {"s", double(prm.s)},
                      {"approx_lowrank", prm.approx_lowrank ? 1.0 : 0.0},
                      {"population_exact", prm.population_exact ? 1.0 : 0.0}};
  if (prm.approx_lowrank) {
    inst.meta.params.emplace_back("bulk_rank", double(rank_bulk));
    if (rank_bulk < ph - 1)
      inst.meta.note = "bulk rank capped at " + std::to_string(rank_bulk);
  }

  // True sparse leading eigenvector of the population pencil.
  {
    IndexSet supp;
    Vec vals;
    for (int idx : supp_half) {
      supp.push_back(idx);
      vals.push_back(vx[idx]);
    }
    for (int idx : supp_half) {
      supp.push_back(ph + idx);
      vals.push_back(vx[idx]);
    }
    double nrm = norm2(vals);
    for (double& v : vals) v /= nrm;
    inst.v1_true = make_sparse(prm.p, supp, vals);
  }

  const bool want_population =
      prm.population_exact || (prm.attach_population && prm.p <= prm.attach_limit);
  if (want_population) {
    Mat sxx = toeplitz_kron(5, h, 0.8);
    Mat a(prm.p, prm.p), b(prm.p, prm.p);
    for (int i = 0; i < ph; ++i)
      for (int j = 0; j < ph; ++j) {
        b(i, j) = sxx(i, j);
        b(ph + i, ph + j) = sxx(i, j);
      }
    // Sxy = L C L^T with C = sum_r sigma_r kx_r ky_r^T (whitened low rank).
    for (size_t r = 0; r < kx.size(); ++r) {
      Vec ax = detail::block_tri_apply(l, 5, kx[r], false);
      Vec ay = detail::block_tri_apply(l, 5, ky[r], false);
      for (int i = 0; i < ph; ++i) {
        if (ax[i] == 0.0) continue;
        double w = sigma[r] * ax[i];
        for (int j = 0; j < ph; ++j) {
          a(i, ph + j) += w * ay[j];
        }
      }
    }
    for (int i = 0; i < ph; ++i)
      for (int j = 0; j < ph; ++j) a(ph + j, i) = a(i, ph + j);
    inst.population = std::make_pair(std::move(a), std::move(b));
  }

  if (prm.population_exact) {
    inst.op = make_dense_pair(inst.population->first, inst.population->second);
    return inst;
  }

  // Sample the two views through the whitened representation:
  // x = (I (x) L) xi, y = (I (x) L) eta with xi ~ N(0, I) and
  // eta = C^T xi + sqrt(I - C^T C) g. With orthonormal K the square root is
  // g + sum_r (sqrt(max(0, 1 - sigma_r^2)) - 1) (ky_r . g) ky_r; the clamp
  // floors would-be-negative variances at zero.
  const int n = prm.n;
  Mat x(n, ph), y(n, ph);
  for (int i = 0; i < n; ++i) {
    Vec gx = normal_vec(ph, rng);
    Vec gy = normal_vec(ph, rng);
    Vec eta = gy;
    for (size_t r = 0; r < kx.size(); ++r) {
      double tx = dot(kx[r], gx);
      double ty = dot(ky[r], gy);
      double shrink = std::sqrt(std::max(0.0, 1.0 - sigma[r] * sigma[r])) - 1.0;
      axpy(sigma[r] * tx + shrink * ty, ky[r], eta);
    }
    Vec xr = detail::block_tri_apply(l, 5, gx, false);
    Vec yr = detail::block_tri_apply(l, 5, eta, false);
    for (int j = 0; j < ph; ++j) {
      x(i, j) = xr[j];
      y(i, j) = yr[j];
    }
  }
  detail::center_columns(x);
  detail::center_columns(y);

  auto sx = std::make_shared<const Mat>(std::move(x));
  auto sy = std::make_shared<const Mat>(std::move(y));
  const int p = prm.p;

  auto split = [ph](const IndexSet& j) {
    std::pair<IndexSet, IndexSet> parts;  // local x-columns, local y-columns
    for (int idx : j) {
      if (idx < ph)
        parts.first.push_back(idx);
      else
        parts.second.push_back(idx - ph);
    }
    return parts;
  };

  PairOperator op;
  op.p = p;
  op.kind = OperatorKind::DataBacked;
  op.apply_a = [sx, sy, ph, p](const Vec& v) {
    if (static_cast<int>(v.size()) != p)
      throw std::invalid_argument("scca apply: dimension mismatch");
    Vec va(v.begin(), v.begin() + ph), vb(v.begin() + ph, v.end());
    const int n = sx->rows;
    Vec wy(n), wx(n);
    for (int i = 0; i < n; ++i) {
      const double* rx = sx->row(i);
      const double* ry = sy->row(i);
      double sa = 0.0, sb = 0.0;
      for (int j = 0; j < ph; ++j) {
        sa += rx[j] * va[j];
        sb += ry[j] * vb[j];
      }
      wx[i] = sa;
      wy[i] = sb;
    }
    Vec out(p, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* rx = sx->row(i);
      const double* ry = sy->row(i);
      for (int j = 0; j < ph; ++j) {
        out[j] += rx[j] * wy[i];
        out[ph + j] += ry[j] * wx[i];
      }
    }
    for (double& e : out) e /= n;
    return out;
  };
  op.apply_b = [sx, sy, ph, p](const Vec& v) {
    if (static_cast<int>(v.size()) != p)
      throw std::invalid_argument("scca apply: dimension mismatch");
    Vec va(v.begin(), v.begin() + ph), vb(v.begin() + ph, v.end());
    Vec ta = detail::gram_apply(*sx, va);
    Vec tb = detail::gram_apply(*sy, vb);
    Vec out(p);
    for (int j = 0; j < ph; ++j) out[j] = ta[j];
    for (int j = 0; j < ph; ++j) out[ph + j] = tb[j];
    return out;
  };
  op.submatrix_a = [sx, sy, split](const IndexSet& j) {
    auto [jx, jy] = split(j);
    Mat cross = detail::gram_cross(*sx, *sy, jx, jy);
    int sxn = static_cast<int>(jx.size());
    Mat m(static_cast<int>(j.size()), static_cast<int>(j.size()));
    for (int a = 0; a < cross.rows; ++a)
      for (int b = 0; b < cross.cols; ++b) {
        m(a, sxn + b) = cross(a, b);
        m(sxn + b, a) = cross(a, b);
      }
    return m;
  };
  op.submatrix_b = [sx, sy, split](const IndexSet& j) {
    auto [jx, jy] = split(j);
    Mat bx = detail::gram_cross(*sx, *sx, jx, jx);
    Mat by = detail::gram_cross(*sy, *sy, jy, jy);
    int sxn = static_cast<int>(jx.size());
    Mat m(static_cast<int>(j.size()), static_cast<int>(j.size()));
    for (int a = 0; a < bx.rows; ++a)
      for (int b = 0; b < bx.cols; ++b) m(a, b) = bx(a, b);
    for (int a = 0; a < by.rows; ++a)
      for (int b = 0; b < by.cols; ++b) m(sxn + a, sxn + b) = by(a, b);
    return m;
  };
  inst.op = std::move(op);
  return inst;
}

struct SfdaParams {
  int p = 0;  // multiple of 5, at least 40 (means live on coordinates 2..40)
  int n = 0;  // total rows, divisible by K
  int K = 2;  // classes; 1 is allowed for degenerate tests
  bool attach_discriminant = true;  // population direction when K = 2
  int attach_limit = 1000;
};

// K-class discriminant instance: class k has mean (2k-2)/(K+2) on
// coordinates 2, 4, ..., 40 (1-based) and shared covariance Sigma. The
// pencil is (between-class scatter, pooled within-class scatter), both
// assembled from sample means (uncentered between-class form).
inline ProblemInstance gen_sfda(const SfdaParams& prm, std::uint64_t seed) {
  if (prm.p < 40 || prm.p % 5 != 0)
    throw std::invalid_argument("gen_sfda: p must be a multiple of 5, at least 40");
  if (prm.K < 1) throw std::invalid_argument("gen_sfda: K must be positive");
  if (prm.n < 2 * prm.K || prm.n % prm.K != 0)
    throw std::invalid_argument("gen_sfda: n must be a multiple of K, >= 2K");
  const int p = prm.p, n = prm.n, K = prm.K;
  const int h = p / 5;
  const int nk = n / K;

  Rng rng(seed);
  Mat l = cholesky_lower(detail::toeplitz_block(h));

  std::vector<Vec> mu(K, Vec(p, 0.0));
  for (int k = 0; k < K; ++k)
    for (int j = 1; j < 40; j += 2) mu[k][j] = double(2 * (k + 1) - 2) / (K + 2);

  Mat x(n, p);
  std::vector<int> labels(n);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < nk; ++i) {
      Vec g = detail::block_tri_apply(l, 5, normal_vec(p, rng), false);
      double* row = x.row(k * nk + i);
      for (int j = 0; j < p; ++j) row[j] = mu[k][j] + g[j];
      labels[k * nk + i] = k;
    }
  }

  // Sample class means, then the two scatter operators.
  Mat means(K, p);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < nk; ++i) {
      const double* row = x.row(k * nk + i);
      for (int j = 0; j < p; ++j) means(k, j) += row[j];
    }
    for (int j = 0; j < p; ++j) means(k, j) /= nk;
  }
  Mat xw = x;  // class-centered rows
  for (int i = 0; i < n; ++i) {
    double* row = xw.row(i);
    const double* m = means.row(labels[i]);
    for (int j = 0; j < p; ++j) row[j] -= m[j];
  }

  auto sm = std::make_shared<const Mat>(std::move(means));
  auto sw = std::make_shared<const Mat>(std::move(xw));
  const double wk = double(nk) / n;

  PairOperator op;
  op.p = p;
  op.kind = OperatorKind::DataBacked;
  op.apply_a = [sm, wk, p](const Vec& v) {
    if (static_cast<int>(v.size()) != p)
      throw std::invalid_argument("sfda apply: dimension mismatch");
    Vec out(p, 0.0);
    for (int k = 0; k < sm->rows; ++k) {
      const double* m = sm->row(k);
      double s = 0.0;
      for (int j = 0; j < p; ++j) s += m[j] * v[j];
      s *= wk;
      for (int j = 0; j < p; ++j) out[j] += s * m[j];
    }
    return out;
  };
  op.apply_b = [sw](const Vec& v) { return detail::gram_apply(*sw, v); };
  op.submatrix_a = [sm, wk](const IndexSet& j) {
    Mat m(static_cast<int>(j.size()), static_cast<int>(j.size()));
    for (int k = 0; k < sm->rows; ++k) {
      const double* mk = sm->row(k);
      for (size_t a = 0; a < j.size(); ++a)
        for (size_t b = 0; b < j.size(); ++b)
          m(static_cast<int>(a), static_cast<int>(b)) += wk * mk[j[a]] * mk[j[b]];
    }
    return m;
  };
  op.submatrix_b = [sw](const IndexSet& j) {
    return detail::gram_cross(*sw, *sw, j, j);
  };

  ProblemInstance inst;
  inst.op = std::move(op);
  inst.meta.name = "sfda";
  inst.meta.seed = seed;
  inst.meta.params = {{"p", double(p)}, {"n", double(n)}, {"K", double(K)}};

  if (K == 2 && prm.attach_discriminant && p <= prm.attach_limit) {
    // Population discriminant Sigma^{-1} (mu_2 - mu_1); Sigma = I (x) D, so
    // the solve splits into Cholesky solves per block.
    Vec diff(p);
    for (int j = 0; j < p; ++j) diff[j] = mu[1][j] - mu[0][j];
    Vec tmp(p);
    for (int b = 0; b < 5; ++b) {
      Vec rhs(h), sol(h);
      for (int i = 0; i < h; ++i) rhs[i] = diff[b * h + i];
      for (int i = 0; i < h; ++i) {  // L z = rhs
        double v = rhs[i];
        for (int k2 = 0; k2 < i; ++k2) v -= l(i, k2) * sol[k2];
        sol[i] = v / l(i, i);
      }
      for (int i = h - 1; i >= 0; --i) {  // L^T w = z
        double v = sol[i];
        for (int k2 = i + 1; k2 < h; ++k2) v -= l(k2, i) * sol[k2];
        sol[i] = v / l(i, i);
      }
      for (int i = 0; i < h; ++i) tmp[b * h + i] = sol[i];
    }
    inst.meta.discriminant = std::move(tmp);
  }
  return inst;
}

// Sliced-mean covariance pencil from labeled data with two classes:
// A = Cov(X) - (n_1 Cov(X_1) + n_2 Cov(X_2)) / n, B = Cov(X), both with the
// 1/n scaling. A single effective class (test-only relaxation) yields A = 0.
inline std::pair<SingleOperator, SingleOperator> sir_estimators(
    const Mat& x, const std::vector<int>& labels) {
  const int n = x.rows, p = x.cols;
  if (n < 2 || p < 1) throw std::invalid_argument("sir_estimators: empty data");
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("sir_estimators: one label per row required");

  std::vector<int> classes;
  for (int l : labels)
    if (std::find(classes.begin(), classes.end(), l) == classes.end())
      classes.push_back(l);
  if (classes.size() > 2)
    throw std::invalid_argument("sir_estimators: more than two classes");
  for (int c : classes) {
    int cnt = 0;
    for (int l : labels) cnt += (l == c);
    if (cnt < 2)
      throw std::invalid_argument("sir_estimators: class with fewer than two rows");
  }

  Mat xc = x;
  detail::center_columns(xc);
  Mat xw = x;  // class-centered
  for (int c : classes) {
    Vec mean(p, 0.0);
    int cnt = 0;
    for (int i = 0; i < n; ++i) {
      if (labels[i] != c) continue;
      ++cnt;
      const double* r = x.row(i);
      for (int j = 0; j < p; ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= cnt;
    for (int i = 0; i < n; ++i) {
      if (labels[i] != c) continue;
      double* r = xw.row(i);
      for (int j = 0; j < p; ++j) r[j] -= mean[j];
    }
  }

  auto sc = std::make_shared<const Mat>(std::move(xc));
  auto sw = std::make_shared<const Mat>(std::move(xw));

  SingleOperator a;
  a.p = p;
  a.apply = [sc, sw](const Vec& v) {
    Vec t1 = detail::gram_apply(*sc, v);
    Vec t2 = detail::gram_apply(*sw, v);
    for (size_t i = 0; i < t1.size(); ++i) t1[i] -= t2[i];
    return t1;
  };
  a.submatrix = [sc, sw](const IndexSet& j) {
    Mat m1 = detail::gram_cross(*sc, *sc, j, j);
    Mat m2 = detail::gram_cross(*sw, *sw, j, j);
    for (size_t i = 0; i < m1.a.size(); ++i) m1.a[i] -= m2.a[i];
    return m1;
  };

  SingleOperator b;
  b.p = p;
  b.apply = [sc](const Vec& v) { return detail::gram_apply(*sc, v); };
  b.submatrix = [sc](const IndexSet& j) { return detail::gram_cross(*sc, *sc, j, j); };
  return {std::move(a), std::move(b)};
}

// Support of v ordered by importance: descending |value|, ties by index.
inline std::vector<int> rank_features(const SparseVec& v) {
  std::vector<int> order(v.support.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(v.values[a]) > std::abs(v.values[b]);
  });
  std::vector<int> out;
  out.reserve(order.size());
  for (int i : order) out.push_back(v.support[i]);
  return out;
}

}  // namespace iftrr
