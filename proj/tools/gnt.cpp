// gnt — simulate dynamic-graph SEM data, fit structure learners, score the
// recovered graphs, and run seeded experiment grids.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphnotears/graphnotears.hpp"

namespace {

using namespace gnt;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::vector<int> parse_lags(const std::string& s) {
  std::vector<int> lags;
  std::size_t pos = 0;
  while (pos <= s.size() && !s.empty()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    try {
      lags.push_back(std::stoi(s.substr(pos, next - pos)));
    } catch (const std::exception&) {
      throw InvalidConfig("bad lag list '" + s + "': expected comma-separated integers");
    }
    pos = next + 1;
    if (pos > s.size()) break;
  }
  if (lags.empty()) throw InvalidConfig("bad lag list '" + s + "'");
  return lags;
}

struct SolverFlags {
  SolverConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--lambda-w", cfg.lambda_w, "L1 coefficient on W");
    app->add_option("--lambda-p", cfg.lambda_p, "L1 coefficient on P");
    app->add_option("--tau-w", cfg.tau_w, "hard threshold on W");
    app->add_option("--tau-p", cfg.tau_p, "hard threshold on P");
    app->add_option("--rho-init", cfg.rho_init, "initial penalty weight");
    app->add_option("--alpha-init", cfg.alpha_init, "initial multiplier");
    app->add_option("--rho-mult", cfg.rho_mult, "penalty growth factor");
    app->add_option("--rho-max", cfg.rho_max, "penalty ceiling");
    app->add_option("--progress-ratio", cfg.progress_ratio,
                    "required shrink of h per dual step");
    app->add_option("--h-tol", cfg.h_tol, "acyclicity tolerance");
    app->add_option("--max-dual-iters", cfg.max_dual_iters, "dual iteration cap");
    app->add_option("--inner-max-iters", cfg.inner_max_iters, "inner solver cap");
    app->add_option("--inner-grad-tol", cfg.inner_grad_tol,
                    "inner projected-gradient tolerance");
    app->add_option("--lbfgs-memory", cfg.lbfgs_memory, "curvature pairs kept");
  }
};

json metrics_json(const Matrix& w_bin, const std::vector<Matrix>& p_bin,
                  const GroundTruthModel& truth) {
  const Matrix truth_w = (truth.W.array() != 0.0).cast<double>().matrix();
  std::vector<Matrix> truth_p;
  for (const Matrix& P : truth.P) {
    truth_p.push_back((P.array() != 0.0).cast<double>().matrix());
  }
  if (p_bin.size() != truth_p.size()) {
    throw LagCountMismatch("eval: fit has " + std::to_string(p_bin.size()) +
                           " lag matrices, truth has " + std::to_string(truth_p.size()));
  }
  const EdgeMetrics mw = score_intra(w_bin, truth_w);
  const std::vector<EdgeMetrics> mp = score_inter(p_bin, truth_p);
  const EdgeMetrics pooled = score_inter_pooled(p_bin, truth_p);

  json out;
  out["W"] = to_json(mw);
  for (std::size_t i = 0; i < mp.size(); ++i) {
    out["P_lag" + std::to_string(i + 1)] = to_json(mp[i]);
  }
  out["P_pooled"] = to_json(pooled);
  out["P_macro_f1"] = macro_f1(mp);
  return out;
}

void write_metrics_csv(const fs::path& path, const json& metrics) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "matrix,tp,fp,fn,reversed,precision,recall,f1,shd\n";
  for (const auto& [name, m] : metrics.items()) {
    if (!m.is_object()) continue;
    out << name << ',' << m["tp"] << ',' << m["fp"] << ',' << m["fn"] << ','
        << m["reversed"] << ',' << m["precision"] << ',' << m["recall"] << ','
        << m["f1"] << ',' << m["shd"] << '\n';
  }
}

int cmd_simulate(const std::string& config_file, const std::string& out_dir,
                 json overrides) {
  json cfg = json::object();
  if (!config_file.empty()) cfg = read_json_file(config_file);
  cfg.update(overrides);

  const auto require_int = [&](const char* key) {
    if (!cfg.contains(key)) {
      throw InvalidConfig(std::string("simulate config: missing field '") + key + "'");
    }
    const auto v = cfg[key].get<long long>();
    if (v < 1) {
      throw InvalidConfig(std::string("simulate config: field '") + key +
                          "' must be a positive integer");
    }
    return static_cast<int>(v);
  };

  const int n = require_int("n");
  const int d = require_int("d");
  const int T = require_int("T");
  const int p = require_int("p");
  if (p >= T) {
    throw InvalidConfig("simulate config: need p < T, got p=" + std::to_string(p) +
                        ", T=" + std::to_string(T));
  }

  DatasetMeta meta;
  meta.noise = cfg.contains("noise") ? noise_from_json(cfg["noise"]) : NoiseSpec{};
  meta.graph = cfg.contains("graph") ? graph_spec_from_json(cfg["graph"]) : GraphModelSpec{};
  meta.seed = cfg.value("seed", std::uint64_t{1});
  for (int l = 1; l <= p; ++l) meta.lags.push_back(l);

  Rng rng(meta.seed);
  const GroundTruthModel truth = gen_ground_truth(d, p, meta.graph, rng);
  const std::vector<Matrix> adjacency = gen_adjacency_series(n, T, meta.graph, rng);
  const DynamicGraphDataset ds = simulate_sem(truth, adjacency, meta.noise, rng);

  save_dataset(out_dir, ds, meta, &truth);
  std::printf("wrote dataset to %s\n", out_dir.c_str());
  std::printf("seed: %llu\n", static_cast<unsigned long long>(meta.seed));
  std::printf("content_hash: %s\n", dataset_content_hash(ds).c_str());
  return kExitOk;
}

int cmd_fit(const std::string& data_dir, const std::string& method,
            const std::string& out_dir, const std::string& lags_flag,
            const SolverConfig& solver, bool strict) {
  DatasetMeta meta;
  const DynamicGraphDataset ds = load_dataset(data_dir, &meta);
  const std::vector<int> lag_list =
      lags_flag.empty() ? meta.lags : parse_lags(lags_flag);
  const LagSpec lags(lag_list);

  const auto t0 = std::chrono::steady_clock::now();
  FitResult fit;
  if (method == "graphnotears") {
    fit = fit_graphnotears(build_stacked(ds, lags), lags, solver);
  } else if (method == "notears_lasso") {
    fit = fit_notears_lasso(build_stacked(ds, lags), solver);
  } else {
    fit = fit_dynotears(ds, lags, solver);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunRecord record;
  record.method = method;
  record.dataset_dir = data_dir;
  record.dataset_hash = dataset_content_hash(ds);
  record.seed = meta.seed;
  record.lags = lag_list;
  record.solver = solver;
  record.h_final = fit.h_final;
  record.objective_final = fit.objective_final;
  record.dual_iters = fit.dual_iters;
  record.converged = fit.converged;
  record.cycle_edges_removed = fit.cycle_edges_removed;
  record.wall_seconds = seconds;
  save_fit_result(out_dir, fit, record);

  std::printf("method: %s\n", method.c_str());
  std::printf("h_final: %.3e  objective: %.6g  dual_iters: %d  converged: %s\n",
              fit.h_final, fit.objective_final, fit.dual_iters,
              fit.converged ? "true" : "false");
  std::printf("wrote result to %s\n", out_dir.c_str());
  if (strict && !fit.converged) {
    std::fprintf(stderr, "error: fit did not converge (strict mode)\n");
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_eval(const std::string& result_dir, const std::string& truth_dir,
             const std::string& out_dir) {
  const LoadedFit fit = load_fit_result(result_dir);
  const GroundTruthModel truth = load_ground_truth(truth_dir);
  const json metrics = metrics_json(fit.W_bin, fit.P_bin, truth);

  const fs::path out = out_dir.empty() ? fs::path(result_dir) : fs::path(out_dir);
  fs::create_directories(out);
  write_json_file(out / "metrics.json", metrics);
  write_metrics_csv(out / "metrics.csv", metrics);

  // Fold the scores into the run record so it is self-describing.
  if (!fit.record.is_null()) {
    json record = fit.record;
    record["metrics"] = metrics;
    write_json_file(fs::path(result_dir) / "run_record.json", record);
  }

  std::printf("f1_w: %.4f  shd_w: %ld\n", metrics["W"]["f1"].get<double>(),
              metrics["W"]["shd"].get<long>());
  std::printf("f1_p: %.4f  shd_p: %ld\n", metrics["P_pooled"]["f1"].get<double>(),
              metrics["P_pooled"]["shd"].get<long>());
  std::printf("wrote metrics to %s\n", out.string().c_str());
  return kExitOk;
}

int cmd_grid(const std::string& config_file, const std::string& out_dir, int jobs,
             bool resume) {
  ExperimentConfig cfg = experiment_from_json(read_json_file(config_file));
  if (jobs > 0) cfg.jobs = jobs;
  if (resume) cfg.resume = true;

  const std::vector<GridRecord> records = run_grid(cfg, out_dir);
  write_grid_csv(fs::path(out_dir) / "results.csv", records);
  const auto plots = write_grid_plots(records, fs::path(out_dir) / "plots");

  std::size_t failed = 0;
  for (const GridRecord& r : records) {
    if (!r.error.empty()) ++failed;
  }
  std::printf("ran %zu cells (%zu failed)\n", records.size(), failed);
  std::printf("wrote %s\n", (fs::path(out_dir) / "results.csv").string().c_str());
  for (const auto& p : plots) {
    std::printf("wrote %s\n", (fs::path(out_dir) / "plots" / p).string().c_str());
  }
  return kExitOk;
}

int cmd_plot(const std::string& grid_csv, const std::string& sorted_weights_dir,
             const std::string& out_dir) {
  if (!grid_csv.empty()) {
    const auto records = read_grid_csv(grid_csv);
    const auto plots = write_grid_plots(records, out_dir);
    for (const auto& p : plots) {
      std::printf("wrote %s\n", (fs::path(out_dir) / p).string().c_str());
    }
  }
  if (!sorted_weights_dir.empty()) {
    const std::string name = write_sorted_weights_plot(sorted_weights_dir, out_dir);
    std::printf("wrote %s\n", (fs::path(out_dir) / name).string().c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structure learning on dynamic graphs"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string sim_config, sim_out;
  json sim_overrides = json::object();
  sim->add_option("--config", sim_config, "JSON config file");
  sim->add_option("--out", sim_out, "output dataset directory")->required();
  std::optional<int> sim_n, sim_d, sim_T, sim_p;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::string> sim_noise, sim_intra, sim_inter;
  std::optional<double> sim_noise_scale, sim_intra_deg, sim_inter_prob, sim_interact;
  bool sim_static_adj = false;
  sim->add_option("--n", sim_n, "nodes per timestamp");
  sim->add_option("--d", sim_d, "features per node");
  sim->add_option("--T", sim_T, "number of timestamps");
  sim->add_option("--p", sim_p, "autoregression order");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--noise", sim_noise, "gaussian|exponential")
      ->check(CLI::IsMember({"gaussian", "exponential"}));
  sim->add_option("--noise-scale", sim_noise_scale, "noise scale");
  sim->add_option("--intra", sim_intra, "intra-slice graph model: er|ba")
      ->check(CLI::IsMember({"er", "ba"}));
  sim->add_option("--inter", sim_inter, "inter-slice graph model: er|sbm")
      ->check(CLI::IsMember({"er", "sbm"}));
  sim->add_option("--intra-mean-degree", sim_intra_deg, "ER mean degree / BA attachment");
  sim->add_option("--inter-edge-prob", sim_inter_prob, "inter-slice edge probability");
  sim->add_option("--interaction-prob", sim_interact, "node interaction probability");
  sim->add_flag("--static-adjacency", sim_static_adj,
                "reuse one interaction graph for all timestamps");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a structure learner to a dataset");
  std::string fit_data, fit_method, fit_out, fit_lags;
  bool fit_strict = false;
  SolverFlags fit_solver;
  fit->add_option("--data", fit_data, "dataset directory")->required();
  fit->add_option("--method", fit_method, "graphnotears|notears_lasso|dynotears")
      ->required()
      ->check(CLI::IsMember({"graphnotears", "notears_lasso", "dynotears"}));
  fit->add_option("--out", fit_out, "result directory")->required();
  fit->add_option("--lags", fit_lags, "comma-separated lags (default: dataset meta)");
  fit->add_flag("--strict", fit_strict, "exit nonzero when the fit does not converge");
  fit_solver.attach(fit);

  // eval
  auto* ev = app.add_subcommand("eval", "score a fit against ground truth");
  std::string eval_result, eval_truth, eval_out;
  ev->add_option("--result", eval_result, "fit result directory")->required();
  ev->add_option("--truth", eval_truth, "dataset directory with W.csv / P_lag<l>.csv")
      ->required();
  ev->add_option("--out", eval_out, "metrics output directory (default: result dir)");

  // grid
  auto* grid = app.add_subcommand("grid", "run an experiment grid");
  std::string grid_config, grid_out;
  int grid_jobs = 0;
  bool grid_resume = false;
  grid->add_option("--config", grid_config, "grid JSON config")->required();
  grid->add_option("--out", grid_out, "output directory")->required();
  grid->add_option("--jobs", grid_jobs, "worker threads");
  grid->add_flag("--resume", grid_resume, "skip cells with completed checkpoints");

  // plot
  auto* plot = app.add_subcommand("plot", "render plots from results");
  std::string plot_csv, plot_sorted, plot_out;
  plot->add_option("--grid-csv", plot_csv, "grid results.csv to plot");
  plot->add_option("--sorted-weights", plot_sorted,
                   "fit result directory for a sorted-weight plot");
  plot->add_option("--out", plot_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      if (sim_n) sim_overrides["n"] = *sim_n;
      if (sim_d) sim_overrides["d"] = *sim_d;
      if (sim_T) sim_overrides["T"] = *sim_T;
      if (sim_p) sim_overrides["p"] = *sim_p;
      if (sim_seed) sim_overrides["seed"] = *sim_seed;
      if (sim_noise || sim_noise_scale) {
        json nj = json::object();
        nj["kind"] = sim_noise.value_or("gaussian");
        if (sim_noise_scale) nj["scale"] = *sim_noise_scale;
        sim_overrides["noise"] = nj;
      }
      if (sim_intra || sim_inter || sim_intra_deg || sim_inter_prob || sim_interact ||
          sim_static_adj) {
        json gj = json::object();
        if (sim_intra) gj["intra_model"] = *sim_intra;
        if (sim_inter) gj["inter_model"] = *sim_inter;
        if (sim_intra_deg) gj["intra_mean_degree"] = *sim_intra_deg;
        if (sim_inter_prob) gj["inter_edge_prob"] = *sim_inter_prob;
        if (sim_interact) gj["interaction_prob"] = *sim_interact;
        if (sim_static_adj) gj["static_adjacency"] = true;
        sim_overrides["graph"] = gj;
      }
      return cmd_simulate(sim_config, sim_out, sim_overrides);
    }
    if (fit->parsed()) {
      return cmd_fit(fit_data, fit_method, fit_out, fit_lags, fit_solver.cfg,
                     fit_strict);
    }
    if (ev->parsed()) return cmd_eval(eval_result, eval_truth, eval_out);
    if (grid->parsed()) return cmd_grid(grid_config, grid_out, grid_jobs, grid_resume);
    if (plot->parsed()) {
      if (plot_csv.empty() && plot_sorted.empty()) {
        std::fprintf(stderr, "plot: need --grid-csv and/or --sorted-weights\n");
        return kExitUsage;
      }
      return cmd_plot(plot_csv, plot_sorted, plot_out);
    }
  } catch (const InvalidConfig& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidSpec& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
