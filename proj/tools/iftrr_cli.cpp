// Command-line front end for the sparse generalized eigenvalue solver.
//
//   iftrr solve       one problem -> result JSON + per-iteration trace CSV
//   iftrr probe       first-step diagnostic -> (rank, |w|, rho_s) CSV
//   iftrr experiment  grid of synthetic trials from a spec file
//
// Problems come from Matrix Market pencils (--A/--B), data matrices
// (--data, optionally --labels), or the built-in generators (--generator).
// Exit codes: 0 converged, 2 iteration cap hit, 1 any error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "iftrr/diagnostics.hpp"
#include "iftrr/experiment.hpp"
#include "iftrr/generators.hpp"
#include "iftrr/io.hpp"
#include "iftrr/solver.hpp"

namespace {

using nlohmann::json;

struct InputFlags {
  std::string a_path, b_path, data_path, labels_path;
  std::string generator;  // scca | sfda
  int gen_p = 100, gen_n = 100, gen_s = 4, gen_K = 2;
  std::string gen_mode = "lowrank";
  bool population = false;
  std::uint64_t seed = 1;
};

void add_input_flags(CLI::App* cmd, InputFlags& in) {
  cmd->add_option("--A", in.a_path, "Matrix Market file for A");
  cmd->add_option("--B", in.b_path, "Matrix Market file for B (identity if omitted)");
  cmd->add_option("--data", in.data_path, "CSV data matrix (rows = samples)");
  cmd->add_option("--labels", in.labels_path,
                  "CSV label column (with --data: sliced-mean pencil)");
  cmd->add_option("--generator", in.generator, "Synthetic instance: scca or sfda");
  cmd->add_option("--p", in.gen_p, "Generator dimension");
  cmd->add_option("--n", in.gen_n, "Generator sample size");
  cmd->add_option("--s", in.gen_s, "Generator planted support size (scca)");
  cmd->add_option("--mode", in.gen_mode, "scca mode: lowrank or approx");
  cmd->add_option("--K", in.gen_K, "Generator class count (sfda)");
  cmd->add_flag("--population", in.population,
                "scca: use the exact population pencil instead of sampling");
  cmd->add_option("--seed", in.seed, "Seed for generators and the solver start");
}

// Builds the pencil operator and a meta description of where it came from.
iftrr::PairOperator build_operator(const InputFlags& in, json& meta) {
  using namespace iftrr;
  int sources = (!in.a_path.empty()) + (!in.data_path.empty()) + (!in.generator.empty());
  if (sources != 1)
    throw std::runtime_error(
        "exactly one input source required: --A, --data, or --generator");

  if (!in.a_path.empty()) {
    LoadedMatrix la = read_matrix_market(in.a_path);
    meta["A"] = in.a_path;
    bool sparse = la.sparse;
    SingleOperator a = operator_from_loaded(std::move(la));
    SingleOperator b;
    if (!in.b_path.empty()) {
      LoadedMatrix lb = read_matrix_market(in.b_path);
      if (lb.n != a.p)
        throw std::runtime_error("A and B have different orders");
      sparse = sparse || lb.sparse;
      b = operator_from_loaded(std::move(lb));
      meta["B"] = in.b_path;
    } else {
      b = identity_operator(a.p);
      meta["B"] = "identity";
    }
    return make_pair_operator(std::move(a), std::move(b),
                              sparse ? OperatorKind::ExplicitSparse
                                     : OperatorKind::ExplicitDense);
  }

  if (!in.data_path.empty()) {
    Mat x = read_csv_matrix(in.data_path);
    meta["data"] = in.data_path;
    meta["rows"] = x.rows;
    meta["cols"] = x.cols;
    if (!in.labels_path.empty()) {
      std::vector<int> labels = read_csv_labels(in.labels_path);
      meta["labels"] = in.labels_path;
      auto [a, b] = sir_estimators(x, labels);
      return make_pair_operator(std::move(a), std::move(b), OperatorKind::DataBacked);
    }
    SingleOperator a = covariance_operator(std::move(x));
    SingleOperator b = identity_operator(a.p);
    return make_pair_operator(std::move(a), std::move(b), OperatorKind::DataBacked);
  }

  meta["generator"] = in.generator;
  meta["seed"] = in.seed;
  if (in.generator == "scca") {
    SccaParams prm;
    prm.p = in.gen_p;
    prm.n = in.gen_n;
    prm.s = in.gen_s;
    prm.approx_lowrank = (in.gen_mode == "approx");
    prm.population_exact = in.population;
    prm.attach_population = in.population;
    meta["p"] = prm.p;
    meta["n"] = prm.n;
    meta["s"] = prm.s;
    meta["mode"] = in.gen_mode;
    meta["population"] = in.population;
    return gen_scca(prm, in.seed).op;
  }
  if (in.generator == "sfda") {
    SfdaParams prm;
    prm.p = in.gen_p;
    prm.n = in.gen_n;
    prm.K = in.gen_K;
    meta["p"] = prm.p;
    meta["n"] = prm.n;
    meta["K"] = prm.K;
    return gen_sfda(prm, in.seed).op;
  }
  throw std::runtime_error("unknown generator '" + in.generator + "'");
}

json config_json(const iftrr::IFTRRConfig& cfg) {
  return json{{"k", cfg.k},
              {"delta_k", cfg.delta_k},
              {"m", cfg.m},
              {"tol", cfg.tol.value},
              {"tol_relative", cfg.tol.relative},
              {"rule", cfg.rule == iftrr::IncrementRule::PerStep ? "per-step" : "plain"},
              {"tol1", cfg.tol1},
              {"tol2", cfg.tol2},
              {"tol3", cfg.tol3},
              {"itermax", cfg.itermax},
              {"seed", cfg.seed}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse generalized eigenvalue solver (inverse-free truncated "
               "Rayleigh-Ritz)"};
  app.require_subcommand(1);

  InputFlags in;
  iftrr::IFTRRConfig cfg;
  std::string out_prefix;
  bool tol_absolute = false;
  std::string rule = "per-step";

  CLI::App* solve = app.add_subcommand("solve", "Solve one sparse pencil problem");
  add_input_flags(solve, in);
  solve->add_option("--k", cfg.k, "Sparsity level")->required();
  solve->add_option("--delta-k", cfg.delta_k, "Support search window above k");
  solve->add_option("--m", cfg.m, "Krylov dimension per iteration");
  solve->add_option("--tol", cfg.tol.value, "Eigenvalue-increment tolerance");
  solve->add_flag("--tol-absolute", tol_absolute,
                  "Treat --tol as absolute (default: relative to |rho|)");
  solve->add_option("--rule", rule, "Increment rule: per-step or plain");
  solve->add_option("--tol1", cfg.tol1, "Residual stop threshold");
  solve->add_option("--tol2", cfg.tol2, "Stagnation stop threshold");
  solve->add_option("--tol3", cfg.tol3, "Rank-cure threshold");
  solve->add_option("--itermax", cfg.itermax, "Iteration cap");
  solve->add_option("--out", out_prefix,
                    "Output prefix (.result.json, .trace.csv, .meta.json)");

  int probe_r = 25;
  CLI::App* probe = app.add_subcommand("probe", "First-step support diagnostic");
  add_input_flags(probe, in);
  probe->add_option("--r", probe_r, "Number of prefix sizes to scan");
  probe->add_option("--m", cfg.m, "Krylov dimension");
  probe->add_option("--tol3", cfg.tol3, "Rank-cure threshold");
  probe->add_option("--out", out_prefix, "Output prefix (.probe.csv, .meta.json)");

  std::string spec_path;
  CLI::App* exper = app.add_subcommand("experiment", "Run a trial grid from a spec file");
  exper->add_option("--spec", spec_path, "Experiment spec file (key = value)")
      ->required();
  exper->add_option("--out", out_prefix, "Override the spec's output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) {
      cfg.seed = in.seed;
      cfg.tol.relative = !tol_absolute;
      if (rule == "per-step")
        cfg.rule = iftrr::IncrementRule::PerStep;
      else if (rule == "plain")
        cfg.rule = iftrr::IncrementRule::Plain;
      else
        throw std::runtime_error("--rule must be per-step or plain");

      json meta;
      iftrr::PairOperator op = build_operator(in, meta);
      meta["config"] = config_json(cfg);
      meta["command"] = "solve";

      iftrr::SolveResult res = iftrr::solve(op, cfg);

      json result;
      result["rho_tilde"] = res.rho_tilde;
      json support = json::array(), values = json::array(), ranked = json::array();
      for (int idx : res.v_tilde.support) support.push_back(idx + 1);
      for (double v : res.v_tilde.values) values.push_back(v);
      for (int idx : iftrr::rank_features(res.v_tilde)) ranked.push_back(idx + 1);
      result["support"] = support;
      result["values"] = values;
      result["ranked_features"] = ranked;
      result["stop_reason"] = iftrr::to_string(res.stop_reason);
      result["iterations"] = res.trace.size();
      long mvp = 0;
      for (const auto& r : res.trace) mvp += r.mvp;
      result["mvp_total"] = mvp;
      result["norm_a_est"] = res.norm_a_est;
      result["norm_b_est"] = res.norm_b_est;

      if (out_prefix.empty()) {
        std::cout << result.dump(2) << "\n";
      } else {
        write_text(out_prefix + ".result.json", result.dump(2) + "\n");
        write_text(out_prefix + ".trace.csv", iftrr::trace_csv(res.trace));
        write_text(out_prefix + ".meta.json", meta.dump(2) + "\n");
      }
      return res.stop_reason == iftrr::StopReason::IterMax ? 2 : 0;
    }

    if (probe->parsed()) {
      cfg.seed = in.seed;
      json meta;
      iftrr::PairOperator op = build_operator(in, meta);
      meta["command"] = "probe";
      meta["r"] = probe_r;
      meta["m"] = cfg.m;

      iftrr::ProbeResult pr = iftrr::probe_first_step(op, cfg, probe_r);
      std::string csv = iftrr::probe_csv(pr);
      if (out_prefix.empty()) {
        std::cout << csv;
      } else {
        write_text(out_prefix + ".probe.csv", csv);
        write_text(out_prefix + ".meta.json", meta.dump(2) + "\n");
      }
      return 0;
    }

    // experiment
    iftrr::ExperimentSpec spec = iftrr::parse_experiment_spec(spec_path);
    if (!out_prefix.empty()) spec.out_prefix = out_prefix;
    if (spec.out_prefix.empty())
      throw std::runtime_error("experiment: no output prefix (spec 'out' or --out)");
    iftrr::ExperimentResult res = iftrr::run_experiment(spec);
    std::cout << "cells: " << res.cells.size() << ", trials: " << res.rows.size()
              << ", written to " << spec.out_prefix << ".{trials,cells}.csv\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
