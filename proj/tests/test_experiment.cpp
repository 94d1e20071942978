#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iftrr/experiment.hpp"
#include "oracles.hpp"

using namespace iftrr;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Drops the trailing elapsed-seconds column of every CSV line; timings are
// the one legitimately non-reproducible output.
std::string mask_elapsed(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    size_t c = line.rfind(',');
    os << line.substr(0, c) << '\n';
  }
  return os.str();
}

struct TempPrefix {
  std::string prefix;
  explicit TempPrefix(const std::string& name) : prefix("/tmp/iftrr_exp_" + name) {}
  ~TempPrefix() {
    for (const char* suf : {".trials.csv", ".cells.csv", ".meta.json"})
      std::remove((prefix + suf).c_str());
  }
};

}  // namespace

TEST_CASE("median of small samples") {
  REQUIRE(detail::median({3.0}) == 3.0);
  REQUIRE(detail::median({3.0, 1.0, 2.0}) == 2.0);
  REQUIRE(detail::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  REQUIRE(std::isnan(detail::median({})));
}

TEST_CASE("first-step probe produces a full support ordering and a flat tail") {
  SccaParams prm;
  prm.p = 20;
  prm.n = 0;
  prm.s = 2;
  prm.population_exact = true;
  ProblemInstance inst = gen_scca(prm, 13);

  IFTRRConfig cfg;
  cfg.m = 10;
  cfg.seed = 5;
  ProbeResult pr = probe_first_step(inst.op, cfg, 10);

  REQUIRE(pr.w.size() == 20);
  std::vector<int> seen = pr.perm;
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 20; ++i) REQUIRE(seen[i] == i);

  REQUIRE(pr.curve.size() == 10);
  double prev = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pr.curve.size(); ++i) {
    REQUIRE(pr.curve[i].s == static_cast<int>(i) + 1);
    if (std::isfinite(prev)) REQUIRE(pr.curve[i].rho >= prev - 1e-10);
    prev = pr.curve[i].rho;
  }

  std::string csv = probe_csv(pr);
  std::istringstream is(csv);
  std::string header;
  std::getline(is, header);
  REQUIRE(header == "s,abs_w,rho");
  std::string line;
  int rows = 0;
  double prev_w = std::numeric_limits<double>::infinity();
  while (std::getline(is, line)) {
    ++rows;
    std::istringstream rs(line);
    std::string tok;
    std::getline(rs, tok, ',');
    REQUIRE(std::stoi(tok) == rows);
    std::getline(rs, tok, ',');
    double w = std::stod(tok);
    REQUIRE(w <= prev_w);  // magnitude ordering is what the probe ranks by
    prev_w = w;
  }
  REQUIRE(rows == 10);

  REQUIRE_THROWS_AS(probe_first_step(inst.op, cfg, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(probe_first_step(inst.op, cfg, 21), std::invalid_argument);
}

TEST_CASE("noiseless cells recover the planted support every time") {
  ExperimentSpec spec;
  spec.generator = "scca";
  spec.p_list = {20};
  spec.n_list = {30};  // ignored by the exact-population mode
  spec.s_list = {2};
  spec.mode_list = {"population"};
  spec.trials = 3;
  spec.workers = 1;
  spec.base_seed = 100;

  ExperimentResult res = run_experiment(spec);
  REQUIRE(res.rows.size() == 3);
  REQUIRE(res.cells.size() == 1);
  REQUIRE(res.cells[0].success_rate == 1.0);
  REQUIRE(res.cells[0].median_angle < 1e-8);
  REQUIRE(res.cells[0].k == 2);  // sparsity follows the planted size

  for (int t = 0; t < 3; ++t) {
    REQUIRE(res.rows[t].trial == t);
    REQUIRE(res.rows[t].seed == 100 + static_cast<std::uint64_t>(t));
    REQUIRE(std::abs(res.rows[t].rho - 0.9) < 1e-6);
    REQUIRE_FALSE(res.rows[t].stop.empty());
  }
}

TEST_CASE("experiment outputs are written and reproducible") {
  TempPrefix t1("run_a"), t2("run_b");
  ExperimentSpec spec;
  spec.generator = "scca";
  spec.p_list = {20};
  spec.n_list = {40};
  spec.s_list = {2};
  spec.mode_list = {"lowrank"};
  spec.trials = 2;
  spec.workers = 1;
  spec.base_seed = 7;
  spec.out_prefix = t1.prefix;

  run_experiment(spec);
  spec.out_prefix = t2.prefix;
  spec.workers = 2;  // scheduling must not change the results
  run_experiment(spec);

  std::string trials1 = slurp(t1.prefix + ".trials.csv");
  std::string trials2 = slurp(t2.prefix + ".trials.csv");
  REQUIRE(trials1.substr(0, trials1.find('\n')) ==
          "generator,p,n,s,mode,K,trial,seed,k,rho,angle,success,iterations,mvp,stop,"
          "elapsed_s");
  REQUIRE(mask_elapsed(trials1) == mask_elapsed(trials2));

  std::string cells = slurp(t1.prefix + ".cells.csv");
  REQUIRE(cells.substr(0, cells.find('\n')) ==
          "generator,p,n,s,mode,K,trials,k,success_rate,median_angle,"
          "median_iterations,median_elapsed_s");

  nlohmann::json meta;
  std::istringstream(slurp(t1.prefix + ".meta.json")) >> meta;
  REQUIRE(meta["generator"] == "scca");
  REQUIRE(meta["trials"] == 2);
  REQUIRE(meta["solver"]["itermax"] == 100);
}

TEST_CASE("experiment grids validate their parameters") {
  ExperimentSpec spec;
  spec.generator = "scca";
  spec.mode_list = {"bogus"};
  spec.trials = 1;
  REQUIRE_THROWS_WITH(run_experiment(spec),
                      Catch::Matchers::ContainsSubstring("unknown mode"));

  spec.mode_list = {"lowrank"};
  spec.trials = 0;
  REQUIRE_THROWS_AS(run_experiment(spec), std::invalid_argument);

  spec.generator = "nope";
  spec.trials = 1;
  REQUIRE_THROWS_WITH(run_experiment(spec),
                      Catch::Matchers::ContainsSubstring("unknown generator"));
}

TEST_CASE("spec files parse with lists, comments, and strict keys") {
  std::string path = "/tmp/iftrr_spec_ok.txt";
  {
    std::ofstream f(path);
    f << "# grid for the two-view generator\n"
         "generator = scca\n"
         "p = 20, 40\n"
         "n = 30 60\n"
         "s = 2\n"
         "mode = lowrank approx\n"
         "trials = 5\n"
         "m = 15\n"
         "tol = 2e-4\n"
         "tol_absolute = 1\n"
         "rule = plain\n"
         "itermax = 50\n"
         "seed = 99\n"
         "workers = 1\n"
         "out = /tmp/iftrr_spec_run\n";
  }
  ExperimentSpec spec = parse_experiment_spec(path);
  std::remove(path.c_str());

  REQUIRE(spec.generator == "scca");
  REQUIRE(spec.p_list == std::vector<int>{20, 40});
  REQUIRE(spec.n_list == std::vector<int>{30, 60});
  REQUIRE(spec.s_list == std::vector<int>{2});
  REQUIRE(spec.mode_list == std::vector<std::string>{"lowrank", "approx"});
  REQUIRE(spec.trials == 5);
  REQUIRE(spec.base.m == 15);
  REQUIRE(spec.base.tol.value == 2e-4);
  REQUIRE_FALSE(spec.base.tol.relative);
  REQUIRE(spec.base.rule == IncrementRule::Plain);
  REQUIRE(spec.base.itermax == 50);
  REQUIRE(spec.base_seed == 99);
  REQUIRE(spec.out_prefix == "/tmp/iftrr_spec_run");
}

TEST_CASE("spec files reject unknown or misplaced keys") {
  auto write_and_parse = [](const std::string& text) {
    std::string path = "/tmp/iftrr_spec_bad.txt";
    {
      std::ofstream f(path);
      f << text;
    }
    ExperimentSpec spec;
    try {
      spec = parse_experiment_spec(path);
    } catch (...) {
      std::remove(path.c_str());
      throw;
    }
    std::remove(path.c_str());
    return spec;
  };

  REQUIRE_THROWS_WITH(write_and_parse("generator = scca\nbananas = 3\n"),
                      Catch::Matchers::ContainsSubstring("unknown key"));
  REQUIRE_THROWS_WITH(write_and_parse("generator = sfda\ns = 4\n"),
                      Catch::Matchers::ContainsSubstring("scca"));
  REQUIRE_THROWS_WITH(write_and_parse("generator = scca\nK = 2\n"),
                      Catch::Matchers::ContainsSubstring("sfda"));
  REQUIRE_THROWS_WITH(write_and_parse("p = 20\n"),
                      Catch::Matchers::ContainsSubstring("generator"));
  REQUIRE_THROWS_WITH(write_and_parse("generator = scca\nnot a pair\n"),
                      Catch::Matchers::ContainsSubstring("key = value"));

  // K on the sfda side is accepted.
  ExperimentSpec ok = write_and_parse("generator = sfda\nK = 2 3\np = 40\nn = 40\n");
  REQUIRE(ok.k_list == std::vector<int>{2, 3});
}
