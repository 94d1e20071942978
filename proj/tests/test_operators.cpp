#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "iftrr/operators.hpp"
#include "iftrr/rng.hpp"
#include "oracles.hpp"

using namespace iftrr;

namespace {

// Dense covariance assembled the obvious O(n p^2) way.
Mat covariance_dense(const Mat& x, bool centered) {
  const int n = x.rows, p = x.cols;
  Vec mean(p, 0.0);
  if (centered) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= n;
  }
  Mat c(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      c(a, b) = acc / n;
    }
  return c;
}

double mat_diff(const Mat& x, const Mat& y) {
  double worst = 0.0;
  for (size_t i = 0; i < x.a.size(); ++i)
    worst = std::max(worst, std::abs(x.a[i] - y.a[i]));
  return worst;
}

}  // namespace

TEST_CASE("dense operator reproduces matrix products and blocks") {
  Rng rng(3);
  Mat m = oracle::rand_sym(6, rng);
  SingleOperator op = dense_operator(m);
  REQUIRE(op.p == 6);

  Vec v = normal_vec(6, rng);
  Vec got = op.apply(v);
  Vec want = matvec(m, v);
  for (int i = 0; i < 6; ++i) REQUIRE(got[i] == want[i]);

  IndexSet j{1, 3, 4};
  REQUIRE(mat_diff(op.submatrix(j), principal_submatrix(m, j)) == 0.0);

  Mat asym = m;
  asym(0, 1) += 1.0;
  REQUIRE_THROWS_AS(dense_operator(asym), std::invalid_argument);
}

TEST_CASE("pair operator validates orders and applies the shift") {
  Rng rng(5);
  Mat a = oracle::rand_sym(5, rng);
  Mat b = oracle::rand_spd(5, rng);
  PairOperator op = make_dense_pair(a, b);
  REQUIRE(op.kind == OperatorKind::ExplicitDense);

  Vec v = normal_vec(5, rng);
  Vec y = apply_shifted(op, 1.7, v);
  Vec want = matvec(a, v);
  Vec bv = matvec(b, v);
  for (int i = 0; i < 5; ++i) REQUIRE(std::abs(y[i] - (want[i] - 1.7 * bv[i])) < 1e-14);

  auto [aj, bj] = extract_submatrices(op, {0, 2});
  REQUIRE(mat_diff(aj, principal_submatrix(a, {0, 2})) == 0.0);
  REQUIRE(mat_diff(bj, principal_submatrix(b, {0, 2})) == 0.0);

  REQUIRE_THROWS_AS(make_pair_operator(dense_operator(oracle::rand_sym(4, rng)),
                                       identity_operator(5),
                                       OperatorKind::ExplicitDense),
                    std::invalid_argument);
}

TEST_CASE("identity operator acts as the identity") {
  SingleOperator id = identity_operator(4);
  Vec v{1.0, -2.0, 3.0, 0.5};
  REQUIRE(id.apply(v) == v);
  Mat sub = id.submatrix({1, 3});
  REQUIRE(sub(0, 0) == 1.0);
  REQUIRE(sub(0, 1) == 0.0);
  REQUIRE(sub(1, 1) == 1.0);
}

TEST_CASE("sparse symmetric storage sums duplicates and mirrors the triangle") {
  // Lower triangle of [[2, 1, 0], [1, 3, 0], [0, 0, 4]], with (1,0) split in two.
  std::vector<std::tuple<int, int, double>> t{
      {0, 0, 2.0}, {1, 0, 0.25}, {1, 0, 0.75}, {1, 1, 3.0}, {2, 2, 4.0}};
  SparseSym s = SparseSym::from_triplets(3, t, true);

  Mat dense = oracle::densify([&](const Vec& v) { return s.apply(v); }, 3);
  Mat want(3, 3);
  want(0, 0) = 2;
  want(0, 1) = want(1, 0) = 1;
  want(1, 1) = 3;
  want(2, 2) = 4;
  REQUIRE(mat_diff(dense, want) == 0.0);

  REQUIRE(mat_diff(s.submatrix({0, 1}), principal_submatrix(want, {0, 1})) == 0.0);
  REQUIRE(mat_diff(s.submatrix({2}), principal_submatrix(want, {2})) == 0.0);

  REQUIRE_THROWS_AS(SparseSym::from_triplets(3, {{0, 3, 1.0}}, false),
                    std::out_of_range);
  REQUIRE_THROWS_AS(SparseSym::from_triplets(0, {}, false), std::invalid_argument);
}

TEST_CASE("sparse operator agrees with its dense counterpart") {
  Rng rng(7);
  // Random sparse symmetric matrix, both triangles given explicitly.
  int n = 9;
  Mat dense(n, n);
  std::vector<std::tuple<int, int, double>> t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      if (rng.uniform() < 0.3) {
        double v = rng.normal();
        dense(i, j) = dense(j, i) = v;
        t.emplace_back(i, j, v);
        if (i != j) t.emplace_back(j, i, v);
      }
    }
  SingleOperator op = sparse_operator(SparseSym::from_triplets(n, t, false));

  Vec v = normal_vec(n, rng);
  Vec got = op.apply(v);
  Vec want = matvec(dense, v);
  for (int i = 0; i < n; ++i) REQUIRE(std::abs(got[i] - want[i]) < 1e-12);

  IndexSet j{0, 2, 5, 8};
  REQUIRE(mat_diff(op.submatrix(j), principal_submatrix(dense, j)) < 1e-15);
}

TEST_CASE("covariance operator matches the dense covariance") {
  Rng rng(13);
  Mat x = oracle::rand_mat(5, 8, rng);
  Mat ref = covariance_dense(x, true);
  SingleOperator op = covariance_operator(x, true);
  REQUIRE(op.p == 8);

  Mat dens = oracle::densify(op.apply, 8);
  REQUIRE(mat_diff(dens, ref) < 1e-10);

  IndexSet j{1, 4, 6};
  REQUIRE(mat_diff(op.submatrix(j), principal_submatrix(ref, j)) < 1e-10);

  // Uncentered variant: plain Gram matrix X^T X / n.
  SingleOperator raw = covariance_operator(x, false);
  Mat gram = covariance_dense(x, false);
  REQUIRE(mat_diff(oracle::densify(raw.apply, 8), gram) < 1e-10);
}

TEST_CASE("covariance operator is linear and positive semidefinite") {
  Rng rng(17);
  Mat x = oracle::rand_mat(12, 7, rng);
  SingleOperator op = covariance_operator(x, true);

  Vec u = normal_vec(7, rng), v = normal_vec(7, rng);
  Vec lhs(7);
  {
    Vec uv(7);
    for (int i = 0; i < 7; ++i) uv[i] = 2.0 * u[i] - 3.0 * v[i];
    lhs = op.apply(uv);
  }
  Vec au = op.apply(u), av = op.apply(v);
  for (int i = 0; i < 7; ++i)
    REQUIRE(std::abs(lhs[i] - (2.0 * au[i] - 3.0 * av[i])) < 1e-10);

  for (int trial = 0; trial < 20; ++trial) {
    Vec w = normal_vec(7, rng);
    REQUIRE(dot(w, op.apply(w)) >= -1e-10 * dot(w, w));
  }

  Vec wrong(6, 1.0);
  REQUIRE_THROWS_AS(op.apply(wrong), std::invalid_argument);
}

TEST_CASE("norm estimate converges on a diagonal operator") {
  Mat d(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  SingleOperator op = dense_operator(d);
  double est = estimate_norm(op.apply, 2, 50, 123);
  REQUIRE(std::abs(est - 3.0) < 1e-6);

  // Determinism: same seed, same estimate.
  REQUIRE(estimate_norm(op.apply, 2, 50, 123) == est);

  // The estimate is ||M x|| for a unit x, so it never exceeds the true norm.
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Mat s = oracle::rand_sym(6, rng);
    Vec eigs = oracle::sym_eigs(s);
    double true_norm = std::max(std::abs(eigs.front()), std::abs(eigs.back()));
    SingleOperator so = dense_operator(s);
    double e = estimate_norm(so.apply, 6, 15, 1000 + trial);
    REQUIRE(e <= true_norm + 1e-10);
    REQUIRE(e > 0.2 * true_norm);  // power iteration gets within a factor fast
  }

  SingleOperator zero = dense_operator(Mat(3, 3));
  REQUIRE(estimate_norm(zero.apply, 3, 10, 5) == 0.0);
  REQUIRE_THROWS_AS(estimate_norm(op.apply, 0, 10, 5), std::invalid_argument);
}

TEST_CASE("seeded rng streams are deterministic and disjoint") {
  REQUIRE(derive_seed(42, 0) == derive_seed(42, 0));
  REQUIRE(derive_seed(42, 0) != derive_seed(42, 1));
  REQUIRE(derive_seed(42, 1) != derive_seed(43, 1));

  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(a.uniform() == b.uniform());
    REQUIRE(a.normal() == b.normal());
  }

  // Normal draws have roughly unit scale.
  Rng c(101);
  double mean = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = c.normal();
    mean += x;
    sq += x * x;
  }
  mean /= n;
  sq /= n;
  REQUIRE(std::abs(mean) < 0.05);
  REQUIRE(std::abs(sq - 1.0) < 0.05);
}
