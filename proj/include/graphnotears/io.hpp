#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphnotears/core.hpp"
#include "graphnotears/design.hpp"
#include "graphnotears/metrics.hpp"
#include "graphnotears/simulate.hpp"
#include "graphnotears/solver.hpp"
#include "graphnotears/version.hpp"

namespace gnt {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Dense CSV matrices: headerless, comma separated, one row per line. Reals
// are written with %.17g so doubles round-trip bit-exactly; binary matrices
// as plain 0/1 integers.
// ---------------------------------------------------------------------------

inline void write_csv_matrix(const fs::path& path, const Matrix& m,
                             bool integer = false) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      if (integer) {
        std::snprintf(buf, sizeof buf, "%ld", std::lround(m(i, j)));
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      }
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      const std::string tok = line.substr(pos, next - pos);
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw IoError("bad numeric field '" + tok + "' in " + path.string());
      }
      pos = next + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("ragged rows in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix file: " + path.string());
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON glue for the spec-bearing config types.
// ---------------------------------------------------------------------------

inline json to_json(const NoiseSpec& n) {
  return json{{"kind", to_string(n.kind)}, {"scale", n.scale}};
}

inline NoiseSpec noise_from_json(const json& j) {
  NoiseSpec n;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    n.kind = NoiseSpec::Kind::kGaussian;
  } else if (kind == "exponential") {
    n.kind = NoiseSpec::Kind::kExponential;
  } else {
    throw InvalidConfig("noise.kind must be 'gaussian' or 'exponential', got '" + kind + "'");
  }
  n.scale = j.value("scale", 1.0);
  if (n.scale <= 0.0) throw InvalidConfig("noise.scale must be > 0");
  return n;
}

inline json to_json(const GraphModelSpec& g) {
  json j{{"intra_model", to_string(g.intra_model)},
         {"inter_model", to_string(g.inter_model)},
         {"intra_mean_degree", g.intra_mean_degree},
         {"inter_edge_prob", g.inter_edge_prob},
         {"weight_low", g.weight_low},
         {"weight_high", g.weight_high},
         {"interaction_prob", g.interaction_prob},
         {"static_adjacency", g.static_adjacency}};
  if (g.sbm) {
    j["sbm"] = {{"num_blocks", g.sbm->num_blocks},
                {"within_prob", g.sbm->within_prob},
                {"between_prob", g.sbm->between_prob}};
  }
  return j;
}

inline GraphModelSpec graph_spec_from_json(const json& j) {
  GraphModelSpec g;
  if (j.contains("intra_model")) {
    const auto s = j.at("intra_model").get<std::string>();
    if (s == "er") g.intra_model = GraphModelSpec::IntraModel::kEr;
    else if (s == "ba") g.intra_model = GraphModelSpec::IntraModel::kBa;
    else throw InvalidConfig("intra_model must be 'er' or 'ba', got '" + s + "'");
  }
  if (j.contains("inter_model")) {
    const auto s = j.at("inter_model").get<std::string>();
    if (s == "er") g.inter_model = GraphModelSpec::InterModel::kEr;
    else if (s == "sbm") g.inter_model = GraphModelSpec::InterModel::kSbm;
    else throw InvalidConfig("inter_model must be 'er' or 'sbm', got '" + s + "'");
  }
  g.intra_mean_degree = j.value("intra_mean_degree", g.intra_mean_degree);
  g.inter_edge_prob = j.value("inter_edge_prob", g.inter_edge_prob);
  g.weight_low = j.value("weight_low", g.weight_low);
  g.weight_high = j.value("weight_high", g.weight_high);
  g.interaction_prob = j.value("interaction_prob", g.interaction_prob);
  g.static_adjacency = j.value("static_adjacency", g.static_adjacency);
  if (j.contains("sbm")) {
    SbmParams sbm;
    sbm.num_blocks = j["sbm"].value("num_blocks", 2);
    sbm.within_prob = j["sbm"].value("within_prob", 0.4);
    sbm.between_prob = j["sbm"].value("between_prob", 0.025);
    g.sbm = sbm;
  }
  try {
    validate_spec(g);
  } catch (const InvalidSpec& e) {
    throw InvalidConfig(e.what());
  }
  return g;
}

inline json to_json(const SolverConfig& c) {
  return json{{"lambda_w", c.lambda_w},
              {"lambda_p", c.lambda_p},
              {"tau_w", c.tau_w},
              {"tau_p", c.tau_p},
              {"rho_init", c.rho_init},
              {"alpha_init", c.alpha_init},
              {"rho_mult", c.rho_mult},
              {"rho_max", c.rho_max},
              {"progress_ratio", c.progress_ratio},
              {"h_tol", c.h_tol},
              {"max_dual_iters", c.max_dual_iters},
              {"inner_max_iters", c.inner_max_iters},
              {"inner_grad_tol", c.inner_grad_tol},
              {"lbfgs_memory", c.lbfgs_memory}};
}

inline SolverConfig solver_from_json(const json& j) {
  SolverConfig c;
  c.lambda_w = j.value("lambda_w", c.lambda_w);
  c.lambda_p = j.value("lambda_p", c.lambda_p);
  c.tau_w = j.value("tau_w", c.tau_w);
  c.tau_p = j.value("tau_p", c.tau_p);
  c.rho_init = j.value("rho_init", c.rho_init);
  c.alpha_init = j.value("alpha_init", c.alpha_init);
  c.rho_mult = j.value("rho_mult", c.rho_mult);
  c.rho_max = j.value("rho_max", c.rho_max);
  c.progress_ratio = j.value("progress_ratio", c.progress_ratio);
  c.h_tol = j.value("h_tol", c.h_tol);
  c.max_dual_iters = j.value("max_dual_iters", c.max_dual_iters);
  c.inner_max_iters = j.value("inner_max_iters", c.inner_max_iters);
  c.inner_grad_tol = j.value("inner_grad_tol", c.inner_grad_tol);
  c.lbfgs_memory = j.value("lbfgs_memory", c.lbfgs_memory);
  try {
    c.validate();
  } catch (const InvalidConfig&) {
    throw;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Dataset directory format: meta.json plus X_<t>.csv / A_<t>.csv for
// t = 1..T, and optional ground truth W.csv / P_lag<l>.csv.
// ---------------------------------------------------------------------------

struct DatasetMeta {
  Index n = 0, d = 0, T = 0;
  std::vector<int> lags;  // generation lags (contiguous 1..p for simulated data)
  NoiseSpec noise;
  std::uint64_t seed = 0;
  GraphModelSpec graph;
  bool has_ground_truth = false;
};

inline json to_json(const DatasetMeta& m) {
  return json{{"format_version", kFormatVersion},
              {"kind", "dynamic_graph_dataset"},
              {"n", m.n},
              {"d", m.d},
              {"T", m.T},
              {"lags", m.lags},
              {"noise", to_json(m.noise)},
              {"seed", m.seed},
              {"graph", to_json(m.graph)},
              {"has_ground_truth", m.has_ground_truth}};
}

inline DatasetMeta meta_from_json(const json& j) {
  DatasetMeta m;
  m.n = j.at("n").get<Index>();
  m.d = j.at("d").get<Index>();
  m.T = j.at("T").get<Index>();
  m.lags = j.value("lags", std::vector<int>{1});
  if (j.contains("noise")) m.noise = noise_from_json(j["noise"]);
  m.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("graph")) m.graph = graph_spec_from_json(j["graph"]);
  m.has_ground_truth = j.value("has_ground_truth", false);
  if (m.n < 1 || m.d < 1 || m.T < 1) {
    throw InvalidConfig("meta.json: n, d, T must be positive");
  }
  return m;
}

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidConfig("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline void save_dataset(const fs::path& dir, const DynamicGraphDataset& ds,
                         DatasetMeta meta,
                         const GroundTruthModel* truth = nullptr) {
  fs::create_directories(dir);
  meta.n = ds.n;
  meta.d = ds.d;
  meta.T = ds.T();
  meta.has_ground_truth = truth != nullptr;
  write_json_file(dir / "meta.json", to_json(meta));
  for (Index t = 0; t < ds.T(); ++t) {
    const std::string suffix = std::to_string(t + 1) + ".csv";
    write_csv_matrix(dir / ("X_" + suffix), ds.features[static_cast<std::size_t>(t)]);
    write_csv_matrix(dir / ("A_" + suffix), ds.adjacency[static_cast<std::size_t>(t)],
                     /*integer=*/true);
  }
  if (truth) {
    write_csv_matrix(dir / "W.csv", truth->W);
    for (int i = 0; i < truth->p(); ++i) {
      write_csv_matrix(dir / ("P_lag" + std::to_string(i + 1) + ".csv"),
                       truth->P[static_cast<std::size_t>(i)]);
    }
  }
}

inline DynamicGraphDataset load_dataset(const fs::path& dir,
                                        DatasetMeta* meta_out = nullptr) {
  const DatasetMeta meta = meta_from_json(read_json_file(dir / "meta.json"));
  DynamicGraphDataset ds;
  ds.n = meta.n;
  ds.d = meta.d;
  for (Index t = 1; t <= meta.T; ++t) {
    ds.features.push_back(read_csv_matrix(dir / ("X_" + std::to_string(t) + ".csv")));
    ds.adjacency.push_back(read_csv_matrix(dir / ("A_" + std::to_string(t) + ".csv")));
  }
  validate_dataset(ds);
  if (meta_out) *meta_out = meta;
  return ds;
}

inline GroundTruthModel load_ground_truth(const fs::path& dir) {
  GroundTruthModel truth;
  truth.W = read_csv_matrix(dir / "W.csv");
  for (int lag = 1;; ++lag) {
    const fs::path p = dir / ("P_lag" + std::to_string(lag) + ".csv");
    if (!fs::exists(p)) break;
    truth.P.push_back(read_csv_matrix(p));
  }
  if (truth.P.empty()) {
    throw IoError("no P_lag<l>.csv files found in " + dir.string());
  }
  return truth;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Content hash over the serialized matrices, for determinism receipts.
inline std::string dataset_content_hash(const DynamicGraphDataset& ds) {
  std::uint64_t h = 14695981039346656037ull;
  const auto mix_matrix = [&h](const Matrix& m) {
    h = fnv1a64(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double), h);
  };
  for (const Matrix& X : ds.features) mix_matrix(X);
  for (const Matrix& A : ds.adjacency) mix_matrix(A);
  return hash_hex(h);
}

// ---------------------------------------------------------------------------
// Fit result directory: estimate matrices plus a self-describing run record.
// ---------------------------------------------------------------------------

inline json to_json(const EdgeMetrics& m) {
  return json{{"tp", m.tp},         {"fp", m.fp},
              {"fn", m.fn},         {"reversed", m.reversed},
              {"precision", m.precision}, {"recall", m.recall},
              {"f1", m.f1},         {"shd", m.shd}};
}

struct RunRecord {
  std::string method;
  std::string dataset_dir;
  std::string dataset_hash;
  std::uint64_t seed = 0;
  std::vector<int> lags;
  SolverConfig solver;
  double h_final = 0.0;
  double objective_final = 0.0;
  int dual_iters = 0;
  bool converged = false;
  int cycle_edges_removed = 0;
  double wall_seconds = 0.0;
  json metrics;  // filled in by eval
};

inline json to_json(const RunRecord& r) {
  json j{{"format_version", kFormatVersion},
         {"library_version", kVersion},
         {"method", r.method},
         {"dataset", r.dataset_dir},
         {"dataset_hash", r.dataset_hash},
         {"seed", r.seed},
         {"lags", r.lags},
         {"solver", to_json(r.solver)},
         {"h_final", r.h_final},
         {"objective_final", r.objective_final},
         {"dual_iters", r.dual_iters},
         {"converged", r.converged},
         {"cycle_edges_removed", r.cycle_edges_removed},
         {"wall_seconds", r.wall_seconds}};
  j["config_hash"] = hash_hex(fnv1a64(
      json{{"method", r.method}, {"lags", r.lags}, {"solver", to_json(r.solver)}}
          .dump()));
  if (!r.metrics.is_null()) j["metrics"] = r.metrics;
  return j;
}

inline void save_fit_result(const fs::path& dir, const FitResult& fit,
                            const RunRecord& record) {
  fs::create_directories(dir);
  write_csv_matrix(dir / "W_cont.csv", fit.W_cont);
  write_csv_matrix(dir / "W_thresh.csv", fit.W_thresh);
  write_csv_matrix(dir / "W_bin.csv", fit.W_bin, /*integer=*/true);
  for (std::size_t i = 0; i < fit.P_cont.size(); ++i) {
    const std::string lag = std::to_string(i + 1);
    write_csv_matrix(dir / ("P_cont_lag" + lag + ".csv"), fit.P_cont[i]);
    write_csv_matrix(dir / ("P_thresh_lag" + lag + ".csv"), fit.P_thresh[i]);
    write_csv_matrix(dir / ("P_bin_lag" + lag + ".csv"), fit.P_bin[i], true);
  }
  write_json_file(dir / "run_record.json", to_json(record));
}

struct LoadedFit {
  Matrix W_thresh, W_bin;
  std::vector<Matrix> P_thresh, P_bin;
  json record;
};

inline LoadedFit load_fit_result(const fs::path& dir) {
  LoadedFit fit;
  fit.W_thresh = read_csv_matrix(dir / "W_thresh.csv");
  fit.W_bin = read_csv_matrix(dir / "W_bin.csv");
  for (int lag = 1;; ++lag) {
    const fs::path p = dir / ("P_bin_lag" + std::to_string(lag) + ".csv");
    if (!fs::exists(p)) break;
    fit.P_bin.push_back(read_csv_matrix(p));
    fit.P_thresh.push_back(
        read_csv_matrix(dir / ("P_thresh_lag" + std::to_string(lag) + ".csv")));
  }
  const fs::path rec = dir / "run_record.json";
  if (fs::exists(rec)) fit.record = read_json_file(rec);
  return fit;
}

}  // namespace gnt
