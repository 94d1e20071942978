#pragma once

// Batch experiment harness: a grid of generator cells x trials, each trial
// generating an instance, solving it, and scoring against the planted
// truth. Trials run on a small worker pool but land in preallocated slots,
// so the output files do not depend on scheduling. Trial seeds are
// base_seed + trial index, identical across cells by design.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "iftrr/diagnostics.hpp"
#include "iftrr/generators.hpp"
#include "iftrr/io.hpp"
#include "iftrr/solver.hpp"

namespace iftrr {

// One diagnostic step from a fresh start: the magnitude profile of the
// first Ritz direction and the leading eigenvalue of every sorted prefix up
// to rank r. This is the curve the support-size selection walks on.
struct ProbeResult {
  std::vector<int> perm;           // magnitude order of the Ritz vector
  Vec w;                           // the Ritz vector itself
  std::vector<ProbePoint> curve;   // (s, rho_s) for s = 1..r
};

inline ProbeResult probe_first_step(const PairOperator& op, const IFTRRConfig& cfg,
                                    int r) {
  if (r < 1 || r > op.p) throw std::invalid_argument("probe_first_step: need 1 <= r <= p");
  Rng rng(derive_seed(cfg.seed, 0));
  Vec v;
  bool found = false;
  for (int attempt = 0; attempt < 10 && !found; ++attempt) {
    v = normal_vec(op.p, rng);
    double nv = norm2(v);
    if (nv == 0.0) continue;
    scale(v, 1.0 / nv);
    found = dot(v, op.apply_b(v)) > 1e-14;
  }
  if (!found) throw std::runtime_error("probe_first_step: no start vector with B energy");
  double rho = dot(v, op.apply_a(v)) / dot(v, op.apply_b(v));

  KrylovBasis kb = arnoldi_basis(op, rho, v, std::min(cfg.m, op.p));
  RitzPair ritz = ritz_leading(kb, op, cfg.tol3);

  ProbeResult out;
  out.perm = sort_support(ritz.vector);
  out.w = std::move(ritz.vector);
  out.curve = prefix_scan(op, out.perm, 1, r, cfg.tol3);
  return out;
}

inline std::string probe_csv(const ProbeResult& pr) {
  std::ostringstream os;
  os << "s,abs_w,rho\n";
  for (const ProbePoint& pt : pr.curve) {
    double w = std::abs(pr.w[pr.perm[pt.s - 1]]);
    os << pt.s << ',' << fmt_g17(w) << ',' << fmt_g17(pt.rho) << '\n';
  }
  return os.str();
}

// ---- experiment grids ----

struct ExperimentSpec {
  std::string generator;       // "scca" | "sfda"
  std::vector<int> p_list{100};
  std::vector<int> n_list{100};
  std::vector<int> s_list{4};            // scca only
  std::vector<std::string> mode_list{"lowrank"};  // scca: lowrank | approx
  std::vector<int> k_list{2};            // sfda only
  int trials = 50;
  int k = 0;                    // solver sparsity; 0 = follow the planted s
  IFTRRConfig base;             // k/seed fields overridden per trial
  std::uint64_t base_seed = 1;
  int workers = 0;              // 0 = hardware concurrency
  std::string out_prefix;       // empty = no files written
};

struct TrialRow {
  std::string generator, mode;
  int p = 0, n = 0, s = 0, K = 0, trial = 0;
  std::uint64_t seed = 0;
  int k = 0;
  double rho = 0.0;
  double angle_rad = 0.0;  // NaN when no reference direction exists
  int success = 0;         // exact planted-support recovery
  int iterations = 0;
  long mvp = 0;
  std::string stop;
  double elapsed_s = 0.0;
};

struct CellSummary {
  std::string generator, mode;
  int p = 0, n = 0, s = 0, K = 0, trials = 0, k = 0;
  double success_rate = 0.0;
  double median_angle = 0.0;
  double median_iterations = 0.0;
  double median_elapsed_s = 0.0;
};

struct ExperimentResult {
  std::vector<TrialRow> rows;
  std::vector<CellSummary> cells;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct CellParams {
  int p = 0, n = 0, s = 0, K = 0;
  std::string mode;
};

inline TrialRow run_trial(const ExperimentSpec& spec, const CellParams& cell,
                          int trial) {
  std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(trial);

  ProblemInstance inst;
  if (spec.generator == "scca") {
    SccaParams prm;
    prm.p = cell.p;
    prm.n = cell.n;
    prm.s = cell.s;
    prm.approx_lowrank = (cell.mode == "approx");
    prm.population_exact = (cell.mode == "population");
    prm.attach_population = prm.population_exact;
    inst = gen_scca(prm, seed);
  } else if (spec.generator == "sfda") {
    SfdaParams prm;
    prm.p = cell.p;
    prm.n = cell.n;
    prm.K = cell.K;
    inst = gen_sfda(prm, seed);
  } else {
    throw std::invalid_argument("experiment: unknown generator '" + spec.generator + "'");
  }

  IFTRRConfig cfg = spec.base;
  cfg.seed = seed;
  cfg.k = spec.k > 0 ? spec.k : cell.s;
  if (cfg.k < 1) throw std::invalid_argument("experiment: no sparsity level (set k)");

  auto t0 = std::chrono::steady_clock::now();
  SolveResult res = solve(inst.op, cfg);
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  TrialRow row;
  row.generator = spec.generator;
  row.mode = cell.mode;
  row.p = cell.p;
  row.n = cell.n;
  row.s = cell.s;
  row.K = cell.K;
  row.trial = trial;
  row.seed = seed;
  row.k = cfg.k;
  row.rho = res.rho_tilde;
  row.iterations = static_cast<int>(res.trace.size());
  for (const IterationRecord& r : res.trace) row.mvp += r.mvp;
  row.stop = to_string(res.stop_reason);
  row.elapsed_s = elapsed;

  Vec got = to_dense(res.v_tilde);
  if (inst.v1_true) {
    row.angle_rad = angle(got, to_dense(*inst.v1_true));
    row.success = support_success(res.v_tilde, *inst.v1_true) ? 1 : 0;
  } else if (inst.meta.discriminant) {
    row.angle_rad = angle(got, *inst.meta.discriminant);
    row.success = 0;
  } else {
    row.angle_rad = std::numeric_limits<double>::quiet_NaN();
    row.success = 0;
  }
  return row;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("experiment: trials must be positive");

  std::vector<detail::CellParams> cells;
  if (spec.generator == "scca") {
    for (int p : spec.p_list)
      for (int n : spec.n_list)
        for (int s : spec.s_list)
          for (const std::string& mode : spec.mode_list) {
            if (mode != "lowrank" && mode != "approx" && mode != "population")
              throw std::invalid_argument("experiment: unknown mode '" + mode + "'");
            cells.push_back({p, n, s, 0, mode});
          }
  } else if (spec.generator == "sfda") {
    for (int p : spec.p_list)
      for (int n : spec.n_list)
        for (int K : spec.k_list) cells.push_back({p, n, 0, K, ""});
  } else {
    throw std::invalid_argument("experiment: unknown generator '" + spec.generator + "'");
  }

  const size_t njobs = cells.size() * static_cast<size_t>(spec.trials);
  std::vector<TrialRow> rows(njobs);
  std::vector<std::exception_ptr> errors(njobs);

  int workers = spec.workers > 0
                    ? spec.workers
                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<int>(workers, static_cast<int>(njobs));

  std::atomic<size_t> next{0};
  auto work = [&]() {
    while (true) {
      size_t job = next.fetch_add(1);
      if (job >= njobs) break;
      size_t ci = job / spec.trials;
      int trial = static_cast<int>(job % spec.trials);
      try {
        rows[job] = detail::run_trial(spec, cells[ci], trial);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult out;
  out.rows = std::move(rows);
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    const detail::CellParams& c = cells[ci];
    CellSummary cs;
    cs.generator = spec.generator;
    cs.mode = c.mode;
    cs.p = c.p;
    cs.n = c.n;
    cs.s = c.s;
    cs.K = c.K;
    cs.trials = spec.trials;
    std::vector<double> angles, iters, times;
    int succ = 0;
    for (int t = 0; t < spec.trials; ++t) {
      const TrialRow& r = out.rows[ci * spec.trials + t];
      cs.k = r.k;
      if (std::isfinite(r.angle_rad)) angles.push_back(r.angle_rad);
      iters.push_back(r.iterations);
      times.push_back(r.elapsed_s);
      succ += r.success;
    }
    cs.success_rate = double(succ) / spec.trials;
    cs.median_angle = detail::median(std::move(angles));
    cs.median_iterations = detail::median(std::move(iters));
    cs.median_elapsed_s = detail::median(std::move(times));
    out.cells.push_back(std::move(cs));
  }

  if (!spec.out_prefix.empty()) {
    {
      std::ofstream f(spec.out_prefix + ".trials.csv");
      if (!f) throw std::runtime_error("cannot write trials CSV");
      f << "generator,p,n,s,mode,K,trial,seed,k,rho,angle,success,iterations,mvp,stop,"
           "elapsed_s\n";
      for (const TrialRow& r : out.rows) {
        char el[32];
        std::snprintf(el, sizeof(el), "%.6f", r.elapsed_s);
        f << r.generator << ',' << r.p << ',' << r.n << ',' << r.s << ',' << r.mode
          << ',' << r.K << ',' << r.trial << ',' << r.seed << ',' << r.k << ','
          << fmt_g17(r.rho) << ',' << fmt_g17(r.angle_rad) << ',' << r.success << ','
          << r.iterations << ',' << r.mvp << ',' << r.stop << ',' << el << '\n';
      }
    }
    {
      std::ofstream f(spec.out_prefix + ".cells.csv");
      if (!f) throw std::runtime_error("cannot write cells CSV");
      f << "generator,p,n,s,mode,K,trials,k,success_rate,median_angle,"
           "median_iterations,median_elapsed_s\n";
      for (const CellSummary& c : out.cells) {
        char el[32];
        std::snprintf(el, sizeof(el), "%.6f", c.median_elapsed_s);
        f << c.generator << ',' << c.p << ',' << c.n << ',' << c.s << ',' << c.mode
          << ',' << c.K << ',' << c.trials << ',' << c.k << ','
          << fmt_g17(c.success_rate) << ',' << fmt_g17(c.median_angle) << ','
          << fmt_g17(c.median_iterations) << ',' << el << '\n';
      }
    }
    {
      nlohmann::json j;
      j["generator"] = spec.generator;
      j["p"] = spec.p_list;
      j["n"] = spec.n_list;
      if (spec.generator == "scca") {
        j["s"] = spec.s_list;
        j["mode"] = spec.mode_list;
      } else {
        j["K"] = spec.k_list;
      }
      j["trials"] = spec.trials;
      j["k"] = spec.k;
      j["base_seed"] = spec.base_seed;
      j["workers"] = workers;
      j["solver"] = {{"delta_k", spec.base.delta_k},
                     {"m", spec.base.m},
                     {"tol", spec.base.tol.value},
                     {"tol_relative", spec.base.tol.relative},
                     {"rule", spec.base.rule == IncrementRule::PerStep ? "per-step" : "plain"},
                     {"tol1", spec.base.tol1},
                     {"tol2", spec.base.tol2},
                     {"tol3", spec.base.tol3},
                     {"itermax", spec.base.itermax}};
      std::ofstream f(spec.out_prefix + ".meta.json");
      if (!f) throw std::runtime_error("cannot write meta JSON");
      f << j.dump(2) << "\n";
    }
  }
  return out;
}

// key = value experiment files; '#' comments, lists are whitespace or comma
// separated. Unknown keys are rejected so typos cannot silently change a
// run.
inline ExperimentSpec parse_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  ExperimentSpec spec;
  bool saw_p = false, saw_n = false, saw_s = false, saw_modes = false, saw_K = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string where = path + ":" + std::to_string(lineno);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank) throw std::runtime_error(where + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::runtime_error(where + ": empty key or value");
    for (char& c : val)
      if (c == ',') c = ' ';
    std::istringstream vs(val);

    auto ints = [&]() {
      std::vector<int> out;
      long v;
      while (vs >> v) out.push_back(static_cast<int>(v));
      if (out.empty()) throw std::runtime_error(where + ": expected integers");
      return out;
    };
    auto one_int = [&]() {
      long v;
      if (!(vs >> v)) throw std::runtime_error(where + ": expected an integer");
      return static_cast<int>(v);
    };
    auto one_double = [&]() {
      double v;
      if (!(vs >> v)) throw std::runtime_error(where + ": expected a number");
      return v;
    };

    if (key == "generator") {
      vs >> spec.generator;
    } else if (key == "p") {
      spec.p_list = ints();
      saw_p = true;
    } else if (key == "n") {
      spec.n_list = ints();
      saw_n = true;
    } else if (key == "s") {
      spec.s_list = ints();
      saw_s = true;
    } else if (key == "mode") {
      spec.mode_list.clear();
      std::string m;
      while (vs >> m) spec.mode_list.push_back(m);
      saw_modes = true;
    } else if (key == "K") {
      spec.k_list = ints();
      saw_K = true;
    } else if (key == "trials") {
      spec.trials = one_int();
    } else if (key == "k") {
      spec.k = one_int();
    } else if (key == "delta_k") {
      spec.base.delta_k = one_int();
    } else if (key == "m") {
      spec.base.m = one_int();
    } else if (key == "tol") {
      spec.base.tol.value = one_double();
    } else if (key == "tol_absolute") {
      spec.base.tol.relative = one_int() == 0;
    } else if (key == "rule") {
      std::string r;
      vs >> r;
      if (r == "per-step")
        spec.base.rule = IncrementRule::PerStep;
      else if (r == "plain")
        spec.base.rule = IncrementRule::Plain;
      else
        throw std::runtime_error(where + ": rule must be per-step or plain");
    } else if (key == "tol1") {
      spec.base.tol1 = one_double();
    } else if (key == "tol2") {
      spec.base.tol2 = one_double();
    } else if (key == "tol3") {
      spec.base.tol3 = one_double();
    } else if (key == "itermax") {
      spec.base.itermax = one_int();
    } else if (key == "seed") {
      long long v;
      if (!(vs >> v)) throw std::runtime_error(where + ": expected a seed");
      spec.base_seed = static_cast<std::uint64_t>(v);
    } else if (key == "workers") {
      spec.workers = one_int();
    } else if (key == "out") {
      spec.out_prefix = val;
    } else {
      throw std::runtime_error(where + ": unknown key '" + key + "'");
    }
  }
  if (spec.generator.empty())
    throw std::runtime_error(path + ": generator not set");
  if (spec.generator == "sfda" && (saw_s || saw_modes))
    throw std::runtime_error(path + ": s/mode apply to the scca generator only");
  if (spec.generator == "scca" && saw_K)
    throw std::runtime_error(path + ": K applies to the sfda generator only");
  (void)saw_p;
  (void)saw_n;
  return spec;
}

}  // namespace iftrr
