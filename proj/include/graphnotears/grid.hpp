#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "graphnotears/baselines.hpp"
#include "graphnotears/io.hpp"
#include "graphnotears/metrics.hpp"

namespace gnt {

// Full experimental grid: the cross product of every list below, times
// methods, times seeds. Defaults mirror the synthetic study design.
struct ExperimentConfig {
  std::vector<int> n_values{100, 200, 300, 500};
  std::vector<int> d_values{5, 10, 20, 30};
  int T = 7;
  std::vector<std::vector<int>> lag_sets{{1}};
  std::vector<GraphModelSpec::IntraModel> intra_models{
      GraphModelSpec::IntraModel::kEr, GraphModelSpec::IntraModel::kBa};
  std::vector<GraphModelSpec::InterModel> inter_models{
      GraphModelSpec::InterModel::kEr, GraphModelSpec::InterModel::kSbm};
  std::vector<NoiseSpec> noises{{NoiseSpec::Kind::kGaussian, 1.0},
                                {NoiseSpec::Kind::kExponential, 1.0}};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> methods{"graphnotears", "notears_lasso", "dynotears"};
  GraphModelSpec graph;  // density/weight knobs shared by all cells
  SolverConfig solver;
  int jobs = 1;
  bool resume = false;

  void validate() const {
    if (n_values.empty() || d_values.empty() || lag_sets.empty() ||
        intra_models.empty() || inter_models.empty() || noises.empty() ||
        seeds.empty() || methods.empty()) {
      throw InvalidConfig("grid config: every grid dimension must be non-empty");
    }
    for (const auto& lags : lag_sets) {
      const LagSpec spec(lags);
      if (spec.max_lag() >= T) {
        throw InvalidConfig("grid config: max lag " + std::to_string(spec.max_lag()) +
                            " must be < T=" + std::to_string(T));
      }
      // The simulator generates contiguous-lag data, so grid cells must fit
      // the lags they were generated with. Non-contiguous lag fitting remains
      // available through `fit` on external datasets.
      for (std::size_t i = 0; i < lags.size(); ++i) {
        if (lags[i] != static_cast<int>(i) + 1) {
          throw InvalidConfig("grid config: lag sets must be contiguous 1..p");
        }
      }
    }
    for (const std::string& m : methods) {
      if (m != "graphnotears" && m != "notears_lasso" && m != "dynotears") {
        throw InvalidConfig("grid config: unknown method '" + m + "'");
      }
    }
    solver.validate();
    validate_spec(graph);
  }
};

inline ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("n")) cfg.n_values = j["n"].get<std::vector<int>>();
  if (j.contains("d")) cfg.d_values = j["d"].get<std::vector<int>>();
  cfg.T = j.value("T", cfg.T);
  if (j.contains("lags")) {
    cfg.lag_sets = j["lags"].get<std::vector<std::vector<int>>>();
  }
  if (j.contains("intra_models")) {
    cfg.intra_models.clear();
    for (const auto& s : j["intra_models"].get<std::vector<std::string>>()) {
      if (s == "er") cfg.intra_models.push_back(GraphModelSpec::IntraModel::kEr);
      else if (s == "ba") cfg.intra_models.push_back(GraphModelSpec::IntraModel::kBa);
      else throw InvalidConfig("grid config: intra_models entry '" + s + "'");
    }
  }
  if (j.contains("inter_models")) {
    cfg.inter_models.clear();
    for (const auto& s : j["inter_models"].get<std::vector<std::string>>()) {
      if (s == "er") cfg.inter_models.push_back(GraphModelSpec::InterModel::kEr);
      else if (s == "sbm") cfg.inter_models.push_back(GraphModelSpec::InterModel::kSbm);
      else throw InvalidConfig("grid config: inter_models entry '" + s + "'");
    }
  }
  if (j.contains("noises")) {
    cfg.noises.clear();
    for (const auto& nj : j["noises"]) cfg.noises.push_back(noise_from_json(nj));
  }
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("graph")) cfg.graph = graph_spec_from_json(j["graph"]);
  if (j.contains("solver")) cfg.solver = solver_from_json(j["solver"]);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.resume = j.value("resume", cfg.resume);
  cfg.validate();
  return cfg;
}

// One (setting, method, seed) unit of work.
struct GridCell {
  int n = 0, d = 0, T = 0;
  std::vector<int> lags;
  GraphModelSpec::IntraModel intra{};
  GraphModelSpec::InterModel inter{};
  NoiseSpec noise;
  std::string method;
  std::uint64_t seed = 0;

  std::string setting_key() const {
    std::string key = "n=" + std::to_string(n) + ",d=" + std::to_string(d) +
                      ",T=" + std::to_string(T) + ",lags=";
    for (int l : lags) key += std::to_string(l) + "|";
    key += ",intra=" + to_string(intra) + ",inter=" + to_string(inter) +
           ",noise=" + to_string(noise.kind) +
           ",scale=" + std::to_string(noise.scale);
    return key;
  }

  std::string cell_key() const {
    return setting_key() + ",method=" + method + ",seed=" + std::to_string(seed);
  }

  // Dataset seed depends on the setting and seed but never on the method, so
  // every method sees the identical dataset.
  std::uint64_t dataset_seed() const {
    return fnv1a64(setting_key(), fnv1a64("dataset-seed") ^ seed);
  }
};

struct GridRecord {
  GridCell cell;
  EdgeMetrics w;
  EdgeMetrics p_pooled;
  std::vector<EdgeMetrics> p_per_lag;
  double p_macro_f1 = 0.0;
  double h_final = 0.0;
  bool converged = false;
  double seconds = 0.0;
  std::string error;  // non-empty when the cell failed
};

// Simulates the cell's dataset and fits its method. Deterministic given the
// cell and the shared config.
inline GridRecord run_grid_cell(const GridCell& cell, const GraphModelSpec& base,
                                const SolverConfig& solver) {
  GridRecord rec;
  rec.cell = cell;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    GraphModelSpec spec = base;
    spec.intra_model = cell.intra;
    spec.inter_model = cell.inter;

    Rng rng(cell.dataset_seed());
    const LagSpec lags(cell.lags);
    const GroundTruthModel truth =
        gen_ground_truth(cell.d, lags.max_lag(), spec, rng);
    const std::vector<Matrix> adjacency =
        gen_adjacency_series(cell.n, cell.T, spec, rng);
    const DynamicGraphDataset ds = simulate_sem(truth, adjacency, cell.noise, rng);

    FitResult fit;
    if (cell.method == "graphnotears") {
      fit = fit_graphnotears(build_stacked(ds, lags), lags, solver);
    } else if (cell.method == "notears_lasso") {
      fit = fit_notears_lasso(build_stacked(ds, lags), solver);
    } else if (cell.method == "dynotears") {
      fit = fit_dynotears(ds, lags, solver);
    } else {
      throw InvalidConfig("unknown method '" + cell.method + "'");
    }

    // Ground truth P is indexed by contiguous lag; pick the lags the fit used.
    std::vector<Matrix> truth_p_bin;
    for (int l : cell.lags) {
      truth_p_bin.push_back(
          (truth.P[static_cast<std::size_t>(l - 1)].array() != 0.0)
              .cast<double>()
              .matrix());
    }
    const Matrix truth_w_bin = (truth.W.array() != 0.0).cast<double>().matrix();

    rec.w = score_intra(fit.W_bin, truth_w_bin);
    rec.p_per_lag = score_inter(fit.P_bin, truth_p_bin);
    rec.p_pooled = score_inter_pooled(fit.P_bin, truth_p_bin);
    rec.p_macro_f1 = macro_f1(rec.p_per_lag);
    rec.h_final = fit.h_final;
    rec.converged = fit.converged;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

inline std::vector<GridCell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<GridCell> cells;
  for (int n : cfg.n_values)
    for (int d : cfg.d_values)
      for (const auto& lags : cfg.lag_sets)
        for (const auto intra : cfg.intra_models)
          for (const auto inter : cfg.inter_models)
            for (const NoiseSpec& noise : cfg.noises)
              for (const std::string& method : cfg.methods)
                for (const std::uint64_t seed : cfg.seeds) {
                  GridCell c;
                  c.n = n;
                  c.d = d;
                  c.T = cfg.T;
                  c.lags = lags;
                  c.intra = intra;
                  c.inter = inter;
                  c.noise = noise;
                  c.method = method;
                  c.seed = seed;
                  cells.push_back(std::move(c));
                }
  return cells;
}

inline json to_json(const GridRecord& r) {
  json per_lag = json::array();
  for (const EdgeMetrics& m : r.p_per_lag) per_lag.push_back(to_json(m));
  return json{{"format_version", kFormatVersion},
              {"library_version", kVersion},
              {"n", r.cell.n},
              {"d", r.cell.d},
              {"T", r.cell.T},
              {"lags", r.cell.lags},
              {"intra", to_string(r.cell.intra)},
              {"inter", to_string(r.cell.inter)},
              {"noise", to_json(r.cell.noise)},
              {"method", r.cell.method},
              {"seed", r.cell.seed},
              {"metrics_w", to_json(r.w)},
              {"metrics_p_pooled", to_json(r.p_pooled)},
              {"metrics_p_per_lag", per_lag},
              {"p_macro_f1", r.p_macro_f1},
              {"h_final", r.h_final},
              {"converged", r.converged},
              {"seconds", r.seconds},
              {"error", r.error}};
}

inline GridRecord grid_record_from_json(const json& j) {
  GridRecord r;
  r.cell.n = j.at("n").get<int>();
  r.cell.d = j.at("d").get<int>();
  r.cell.T = j.at("T").get<int>();
  r.cell.lags = j.at("lags").get<std::vector<int>>();
  r.cell.intra = j.at("intra").get<std::string>() == "er"
                     ? GraphModelSpec::IntraModel::kEr
                     : GraphModelSpec::IntraModel::kBa;
  r.cell.inter = j.at("inter").get<std::string>() == "er"
                     ? GraphModelSpec::InterModel::kEr
                     : GraphModelSpec::InterModel::kSbm;
  r.cell.noise = noise_from_json(j.at("noise"));
  r.cell.method = j.at("method").get<std::string>();
  r.cell.seed = j.at("seed").get<std::uint64_t>();
  const auto metrics_from = [](const json& mj) {
    EdgeMetrics m;
    m.tp = mj.at("tp").get<long>();
    m.fp = mj.at("fp").get<long>();
    m.fn = mj.at("fn").get<long>();
    m.reversed = mj.at("reversed").get<long>();
    m.precision = mj.at("precision").get<double>();
    m.recall = mj.at("recall").get<double>();
    m.f1 = mj.at("f1").get<double>();
    m.shd = mj.at("shd").get<long>();
    return m;
  };
  r.w = metrics_from(j.at("metrics_w"));
  r.p_pooled = metrics_from(j.at("metrics_p_pooled"));
  for (const auto& mj : j.at("metrics_p_per_lag")) {
    r.p_per_lag.push_back(metrics_from(mj));
  }
  r.p_macro_f1 = j.value("p_macro_f1", 0.0);
  r.h_final = j.value("h_final", 0.0);
  r.converged = j.value("converged", false);
  r.seconds = j.value("seconds", 0.0);
  r.error = j.value("error", "");
  return r;
}

// Runs every cell on a small worker pool. Completed cells are checkpointed
// under <out>/cells/<hash>.json so an interrupted grid can resume; failures
// are recorded and do not stop the sweep.
inline std::vector<GridRecord> run_grid(const ExperimentConfig& cfg,
                                        const fs::path& out_dir,
                                        bool verbose = true) {
  cfg.validate();
  const std::vector<GridCell> cells = enumerate_cells(cfg);
  fs::create_directories(out_dir / "cells");

  std::vector<GridRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;

  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const GridCell& cell = cells[i];
      const fs::path checkpoint =
          out_dir / "cells" / (hash_hex(fnv1a64(cell.cell_key())) + ".json");

      bool reused = false;
      if (cfg.resume && fs::exists(checkpoint)) {
        try {
          records[i] = grid_record_from_json(read_json_file(checkpoint));
          reused = true;
        } catch (const std::exception&) {
          reused = false;  // corrupt checkpoint: recompute
        }
      }
      if (!reused) {
        records[i] = run_grid_cell(cell, cfg.graph, cfg.solver);
        write_json_file(checkpoint, to_json(records[i]));
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (verbose) {
        std::scoped_lock lock(log_mutex);
        std::fprintf(stderr, "[%zu/%zu]%s %s  f1_w=%.3f f1_p=%.3f %s\n", finished,
                     cells.size(), reused ? " (cached)" : "", cell.cell_key().c_str(),
                     records[i].w.f1, records[i].p_pooled.f1,
                     records[i].error.empty() ? "" : records[i].error.c_str());
      }
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return records;
}

// ---------------------------------------------------------------------------
// Long-format CSV: one row per run and one mean row per aggregate cell, with
// 95% CI columns (normal approximation, 1.96 sd / sqrt(k)) on the mean rows.
// ---------------------------------------------------------------------------

inline const char* kGridCsvHeader =
    "n,d,T,lags,intra,inter,noise,noise_scale,method,seed,stat,"
    "f1_w,shd_w,precision_w,recall_w,f1_p,shd_p,precision_p,recall_p,f1_p_macro,"
    "h_final,converged,seconds,f1_w_ci95,f1_p_ci95,shd_w_ci95,shd_p_ci95,error";

namespace detail {

inline std::string lags_compact(const std::vector<int>& lags) {
  std::string s;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (i) s += '|';
    s += std::to_string(lags[i]);
  }
  return s;
}

struct MeanCi {
  double mean = 0.0;
  double ci95 = 0.0;
};

inline MeanCi mean_ci(const std::vector<double>& xs) {
  MeanCi out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    out.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return out;
}

}  // namespace detail

// Reads the run rows of a grid CSV back into records (confusion counts are
// not reconstructed; derived scores suffice for plotting and aggregation).
inline std::vector<GridRecord> read_grid_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("n,d,T,lags", 0) != 0) {
    throw IoError("not a grid results CSV: " + path.string());
  }
  std::vector<GridRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      f.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    if (f.size() < 23 || f[10] != "run") continue;
    GridRecord r;
    r.cell.n = std::stoi(f[0]);
    r.cell.d = std::stoi(f[1]);
    r.cell.T = std::stoi(f[2]);
    for (std::size_t p0 = 0; p0 <= f[3].size() && !f[3].empty();) {
      std::size_t nx = f[3].find('|', p0);
      if (nx == std::string::npos) nx = f[3].size();
      r.cell.lags.push_back(std::stoi(f[3].substr(p0, nx - p0)));
      p0 = nx + 1;
      if (p0 > f[3].size()) break;
    }
    r.cell.intra = f[4] == "er" ? GraphModelSpec::IntraModel::kEr
                                : GraphModelSpec::IntraModel::kBa;
    r.cell.inter = f[5] == "er" ? GraphModelSpec::InterModel::kEr
                                : GraphModelSpec::InterModel::kSbm;
    r.cell.noise.kind = f[6] == "gaussian" ? NoiseSpec::Kind::kGaussian
                                           : NoiseSpec::Kind::kExponential;
    r.cell.noise.scale = std::stod(f[7]);
    r.cell.method = f[8];
    r.cell.seed = std::stoull(f[9]);
    r.w.f1 = std::stod(f[11]);
    r.w.shd = std::stol(f[12]);
    r.w.precision = std::stod(f[13]);
    r.w.recall = std::stod(f[14]);
    r.p_pooled.f1 = std::stod(f[15]);
    r.p_pooled.shd = std::stol(f[16]);
    r.p_pooled.precision = std::stod(f[17]);
    r.p_pooled.recall = std::stod(f[18]);
    r.p_macro_f1 = std::stod(f[19]);
    r.h_final = std::stod(f[20]);
    r.converged = f[21] == "1";
    r.seconds = std::stod(f[22]);
    if (f.size() >= 28) r.error = f[27];
    records.push_back(std::move(r));
  }
  return records;
}

inline void write_grid_csv(const fs::path& path,
                           const std::vector<GridRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << kGridCsvHeader << '\n';

  char buf[64];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };

  const auto prefix = [&](const GridCell& c) {
    return std::to_string(c.n) + ',' + std::to_string(c.d) + ',' +
           std::to_string(c.T) + ',' + detail::lags_compact(c.lags) + ',' +
           to_string(c.intra) + ',' + to_string(c.inter) + ',' +
           to_string(c.noise.kind) + ',' + num(c.noise.scale) + ',' + c.method;
  };

  // Run rows, in enumeration order.
  for (const GridRecord& r : records) {
    out << prefix(r.cell) << ',' << r.cell.seed << ",run," << num(r.w.f1) << ','
        << r.w.shd << ',' << num(r.w.precision) << ',' << num(r.w.recall) << ','
        << num(r.p_pooled.f1) << ',' << r.p_pooled.shd << ','
        << num(r.p_pooled.precision) << ',' << num(r.p_pooled.recall) << ','
        << num(r.p_macro_f1) << ',' << num(r.h_final) << ','
        << (r.converged ? 1 : 0) << ',' << num(r.seconds) << ",,,,,"
        << (r.error.empty() ? "" : "\"" + r.error + "\"") << '\n';
  }

  // Aggregate rows: group by everything except the seed, preserving first-seen
  // order; failed runs are excluded from the statistics.
  std::vector<std::string> group_order;
  std::vector<std::vector<const GridRecord*>> groups;
  for (const GridRecord& r : records) {
    GridCell key = r.cell;
    key.seed = 0;
    const std::string k = key.cell_key();
    std::size_t gi = 0;
    for (; gi < group_order.size(); ++gi) {
      if (group_order[gi] == k) break;
    }
    if (gi == group_order.size()) {
      group_order.push_back(k);
      groups.emplace_back();
    }
    groups[gi].push_back(&r);
  }

  for (const auto& group : groups) {
    std::vector<double> f1w, shdw, precw, recw, f1p, shdp, precp, recp, f1pm, h, secs;
    int converged_all = 1;
    std::size_t failed = 0;
    for (const GridRecord* r : group) {
      if (!r->error.empty()) {
        ++failed;
        continue;
      }
      f1w.push_back(r->w.f1);
      shdw.push_back(static_cast<double>(r->w.shd));
      precw.push_back(r->w.precision);
      recw.push_back(r->w.recall);
      f1p.push_back(r->p_pooled.f1);
      shdp.push_back(static_cast<double>(r->p_pooled.shd));
      precp.push_back(r->p_pooled.precision);
      recp.push_back(r->p_pooled.recall);
      f1pm.push_back(r->p_macro_f1);
      h.push_back(r->h_final);
      secs.push_back(r->seconds);
      if (!r->converged) converged_all = 0;
    }
    if (f1w.empty()) continue;
    const auto mf1w = detail::mean_ci(f1w);
    const auto mshdw = detail::mean_ci(shdw);
    const auto mf1p = detail::mean_ci(f1p);
    const auto mshdp = detail::mean_ci(shdp);
    out << prefix(group.front()->cell) << ",,mean," << num(mf1w.mean) << ','
        << num(mshdw.mean) << ',' << num(detail::mean_ci(precw).mean) << ','
        << num(detail::mean_ci(recw).mean) << ',' << num(mf1p.mean) << ','
        << num(mshdp.mean) << ',' << num(detail::mean_ci(precp).mean) << ','
        << num(detail::mean_ci(recp).mean) << ',' << num(detail::mean_ci(f1pm).mean)
        << ',' << num(detail::mean_ci(h).mean) << ',' << converged_all << ','
        << num(detail::mean_ci(secs).mean) << ',' << num(mf1w.ci95) << ','
        << num(mf1p.ci95) << ',' << num(mshdw.ci95) << ',' << num(mshdp.ci95)
        << ','
        << (failed ? ("\"" + std::to_string(failed) + " failed\"") : "") << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace gnt
