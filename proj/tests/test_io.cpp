#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "iftrr/io.hpp"
#include "iftrr/rng.hpp"
#include "oracles.hpp"

using namespace iftrr;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path(std::string("/tmp/iftrr_test_") + name) {}
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& text) {
    std::ofstream f(path);
    f << text;
  }
};

double mat_diff(const Mat& x, const Mat& y) {
  double worst = 0.0;
  for (size_t i = 0; i < x.a.size(); ++i)
    worst = std::max(worst, std::abs(x.a[i] - y.a[i]));
  return worst;
}

}  // namespace

TEST_CASE("g17 formatting round-trips doubles exactly") {
  for (double v : {1.0, -0.1, 3.141592653589793, 1e-300, 123456789.123456789}) {
    REQUIRE(std::stod(fmt_g17(v)) == v);
  }
}

TEST_CASE("dense array files round-trip bit for bit") {
  Rng rng(211);
  Mat m = oracle::rand_sym(5, rng);
  TempFile f("array.mtx");
  write_mm_array_sym(f.path, m);

  LoadedMatrix lm = read_matrix_market(f.path);
  REQUIRE_FALSE(lm.sparse);
  REQUIRE(lm.n == 5);
  REQUIRE(mat_diff(lm.dense, m) == 0.0);

  SingleOperator op = operator_from_loaded(std::move(lm));
  Vec v = normal_vec(5, rng);
  Vec got = op.apply(v);
  Vec want = matvec(m, v);
  for (int i = 0; i < 5; ++i) REQUIRE(got[i] == want[i]);
}

TEST_CASE("coordinate files mirror the stored triangle") {
  Mat m(4, 4);
  m(0, 0) = 2.0;
  m(2, 1) = m(1, 2) = -1.5;
  m(3, 3) = 7.0;
  TempFile f("coord.mtx");
  write_mm_coord_sym(f.path, m);

  LoadedMatrix lm = read_matrix_market(f.path);
  REQUIRE(lm.sparse);
  REQUIRE(lm.n == 4);
  Mat dense = oracle::densify([&](const Vec& v) { return lm.sp.apply(v); }, 4);
  REQUIRE(mat_diff(dense, m) == 0.0);
}

TEST_CASE("a general array file must actually be symmetric") {
  TempFile ok("gen_ok.mtx");
  ok.write(
      "%%MatrixMarket matrix array real general\n"
      "2 2\n1\n3\n3\n2\n");
  LoadedMatrix lm = read_matrix_market(ok.path);
  REQUIRE(lm.dense(0, 1) == 3.0);
  REQUIRE(lm.dense(1, 0) == 3.0);

  TempFile bad("gen_bad.mtx");
  bad.write(
      "%%MatrixMarket matrix array real general\n"
      "2 2\n1\n3\n4\n2\n");
  REQUIRE_THROWS_WITH(read_matrix_market(bad.path),
                      Catch::Matchers::ContainsSubstring("not symmetric"));
}

TEST_CASE("malformed matrix files are rejected with context") {
  TempFile notmm("notmm.mtx");
  notmm.write("hello\n1 1\n2\n");
  REQUIRE_THROWS_WITH(read_matrix_market(notmm.path),
                      Catch::Matchers::ContainsSubstring("Matrix Market"));

  TempFile gencoord("gencoord.mtx");
  gencoord.write("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 2.0\n");
  REQUIRE_THROWS_WITH(read_matrix_market(gencoord.path),
                      Catch::Matchers::ContainsSubstring("symmetric"));

  TempFile oob("oob.mtx");
  oob.write("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 2.0\n");
  REQUIRE_THROWS_WITH(read_matrix_market(oob.path),
                      Catch::Matchers::ContainsSubstring("out of range"));

  TempFile nan_file("nan.mtx");
  nan_file.write("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 nan\n");
  REQUIRE_THROWS_WITH(read_matrix_market(nan_file.path),
                      Catch::Matchers::ContainsSubstring("non-finite"));

  TempFile trunc("trunc.mtx");
  trunc.write("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 1 2.0\n");
  REQUIRE_THROWS_WITH(read_matrix_market(trunc.path),
                      Catch::Matchers::ContainsSubstring("expected"));

  TempFile rect("rect.mtx");
  rect.write("%%MatrixMarket matrix array real symmetric\n2 3\n1\n2\n3\n");
  REQUIRE_THROWS_AS(read_matrix_market(rect.path), std::runtime_error);

  REQUIRE_THROWS_WITH(read_matrix_market("/tmp/iftrr_no_such_file.mtx"),
                      Catch::Matchers::ContainsSubstring("cannot open"));
}

TEST_CASE("comment and blank lines are skipped in matrix files") {
  TempFile f("comments.mtx");
  f.write(
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "% a comment\n"
      "\n"
      "2 2 2\n"
      "% another\n"
      "1 1 4.0\n"
      "2 1 1.0\n");
  LoadedMatrix lm = read_matrix_market(f.path);
  REQUIRE(lm.n == 2);
  Mat dense = oracle::densify([&](const Vec& v) { return lm.sp.apply(v); }, 2);
  REQUIRE(dense(0, 0) == 4.0);
  REQUIRE(dense(0, 1) == 1.0);
  REQUIRE(dense(1, 0) == 1.0);
}

TEST_CASE("CSV matrices skip one header row and reject ragged rows") {
  TempFile f("data.csv");
  f.write("x1,x2,x3\n1,2,3\n4,5,6\n");
  Mat m = read_csv_matrix(f.path);
  REQUIRE(m.rows == 2);
  REQUIRE(m.cols == 3);
  REQUIRE(m(0, 0) == 1.0);
  REQUIRE(m(1, 2) == 6.0);

  TempFile noheader("data2.csv");
  noheader.write("1.5,2.5\n-1,0\n");
  Mat m2 = read_csv_matrix(noheader.path);
  REQUIRE(m2.rows == 2);
  REQUIRE(m2(0, 0) == 1.5);

  TempFile ragged("ragged.csv");
  ragged.write("1,2\n3\n");
  REQUIRE_THROWS_WITH(read_csv_matrix(ragged.path),
                      Catch::Matchers::ContainsSubstring("ragged"));

  TempFile empty("empty.csv");
  empty.write("col\n");
  REQUIRE_THROWS_WITH(read_csv_matrix(empty.path),
                      Catch::Matchers::ContainsSubstring("no data"));
}

TEST_CASE("CSV labels are a single integer column") {
  TempFile f("labels.csv");
  f.write("class\n0\n0\n1\n");
  std::vector<int> l = read_csv_labels(f.path);
  REQUIRE(l == std::vector<int>{0, 0, 1});

  TempFile wide("wide.csv");
  wide.write("0,1\n");
  REQUIRE_THROWS_WITH(read_csv_labels(wide.path),
                      Catch::Matchers::ContainsSubstring("single column"));

  TempFile frac("frac.csv");
  frac.write("0.5\n");
  REQUIRE_THROWS_WITH(read_csv_labels(frac.path),
                      Catch::Matchers::ContainsSubstring("not an integer"));
}
