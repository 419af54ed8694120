#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "graphnotears/io.hpp"

using namespace gnt;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gnt_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("csv matrices round-trip bit-exactly", "[io]") {
  const fs::path dir = temp_dir("csv");
  Rng rng(1);
  Matrix m(7, 3);
  for (Index i = 0; i < m.size(); ++i) {
    m(i) = rng.normal(3.0) * std::pow(10.0, rng.uniform(-12.0, 12.0));
  }
  m(0, 0) = 0.0;
  m(1, 1) = -1.0 / 3.0;
  write_csv_matrix(dir / "m.csv", m);
  const Matrix back = read_csv_matrix(dir / "m.csv");
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK(back == m);  // %.17g preserves doubles exactly

  CHECK_THROWS_AS(read_csv_matrix(dir / "missing.csv"), IoError);
}

TEST_CASE("dataset save/load round-trips and validates", "[io]") {
  const fs::path dir = temp_dir("ds");
  GraphModelSpec spec;
  Rng rng(42);
  const GroundTruthModel truth = gen_ground_truth(3, 2, spec, rng);
  const auto adjacency = gen_adjacency_series(10, 4, spec, rng);
  const auto ds = simulate_sem(truth, adjacency, NoiseSpec{}, rng);

  DatasetMeta meta;
  meta.lags = {1, 2};
  meta.noise = NoiseSpec{};
  meta.seed = 42;
  meta.graph = spec;
  save_dataset(dir, ds, meta, &truth);

  DatasetMeta loaded_meta;
  const auto loaded = load_dataset(dir, &loaded_meta);
  CHECK(loaded.n == ds.n);
  CHECK(loaded.d == ds.d);
  CHECK(loaded.T() == ds.T());
  CHECK(loaded_meta.seed == 42);
  CHECK(loaded_meta.lags == std::vector<int>{1, 2});
  for (Index t = 0; t < ds.T(); ++t) {
    CHECK(loaded.features[static_cast<std::size_t>(t)] ==
          ds.features[static_cast<std::size_t>(t)]);
    CHECK(loaded.adjacency[static_cast<std::size_t>(t)] ==
          ds.adjacency[static_cast<std::size_t>(t)]);
  }
  CHECK(dataset_content_hash(loaded) == dataset_content_hash(ds));

  const auto loaded_truth = load_ground_truth(dir);
  CHECK(loaded_truth.W == truth.W);
  REQUIRE(loaded_truth.p() == 2);
  CHECK(loaded_truth.P[0] == truth.P[0]);
  CHECK(loaded_truth.P[1] == truth.P[1]);
}

TEST_CASE("meta parsing reports offending fields", "[io]") {
  const fs::path dir = temp_dir("meta");
  write_json_file(dir / "meta.json",
                  json{{"n", 0}, {"d", 3}, {"T", 4}});
  try {
    load_dataset(dir);
    FAIL("expected InvalidConfig");
  } catch (const InvalidConfig& e) {
    CHECK(std::string(e.what()).find("n, d, T") != std::string::npos);
  }

  write_json_file(dir / "meta.json", json{{"n", 2},
                                          {"d", 2},
                                          {"T", 2},
                                          {"noise", {{"kind", "cauchy"}}}});
  CHECK_THROWS_AS(load_dataset(dir), InvalidConfig);
}

TEST_CASE("malformed JSON raises InvalidConfig with the file name", "[io]") {
  const fs::path dir = temp_dir("badjson");
  {
    std::ofstream out(dir / "meta.json");
    out << "{ not json";
  }
  try {
    read_json_file(dir / "meta.json");
    FAIL("expected InvalidConfig");
  } catch (const InvalidConfig& e) {
    CHECK(std::string(e.what()).find("meta.json") != std::string::npos);
  }
}

TEST_CASE("fit results round-trip through the result directory", "[io]") {
  const fs::path dir = temp_dir("fit");
  GraphModelSpec spec;
  Rng rng(7);
  const GroundTruthModel truth = gen_ground_truth(4, 1, spec, rng);
  const auto adjacency = gen_adjacency_series(30, 5, spec, rng);
  const auto ds = simulate_sem(truth, adjacency, NoiseSpec{}, rng);
  const auto design = build_stacked(ds, LagSpec({1}));
  const auto fit = fit_graphnotears(design, LagSpec({1}), SolverConfig{});

  RunRecord record;
  record.method = "graphnotears";
  record.dataset_dir = "memory";
  record.seed = 7;
  record.lags = {1};
  record.solver = SolverConfig{};
  record.h_final = fit.h_final;
  record.converged = fit.converged;
  save_fit_result(dir, fit, record);

  const auto loaded = load_fit_result(dir);
  CHECK(loaded.W_thresh == fit.W_thresh);
  CHECK(loaded.W_bin == fit.W_bin);
  REQUIRE(loaded.P_bin.size() == 1);
  CHECK(loaded.P_bin[0] == fit.P_bin[0]);
  CHECK(loaded.record["method"] == "graphnotears");
  CHECK(loaded.record["solver"]["lambda_w"] == 0.01);
  CHECK(loaded.record.contains("config_hash"));
}

TEST_CASE("solver config JSON round-trip", "[io]") {
  SolverConfig cfg;
  cfg.lambda_w = 0.05;
  cfg.tau_p = 0.4;
  cfg.inner_max_iters = 123;
  const SolverConfig back = solver_from_json(to_json(cfg));
  CHECK(back.lambda_w == 0.05);
  CHECK(back.tau_p == 0.4);
  CHECK(back.inner_max_iters == 123);
  CHECK(back.rho_max == cfg.rho_max);

  json bad = to_json(cfg);
  bad["progress_ratio"] = 1.5;
  CHECK_THROWS_AS(solver_from_json(bad), InvalidConfig);
}

TEST_CASE("graph spec JSON round-trip including SBM block", "[io]") {
  GraphModelSpec g;
  g.inter_model = GraphModelSpec::InterModel::kSbm;
  g.sbm = SbmParams{3, 0.8, 0.05};
  g.static_adjacency = true;
  const GraphModelSpec back = graph_spec_from_json(to_json(g));
  CHECK(back.inter_model == GraphModelSpec::InterModel::kSbm);
  REQUIRE(back.sbm.has_value());
  CHECK(back.sbm->num_blocks == 3);
  CHECK(back.sbm->within_prob == 0.8);
  CHECK(back.static_adjacency);

  CHECK_THROWS_AS(graph_spec_from_json(json{{"intra_model", "grid"}}), InvalidConfig);
  CHECK_THROWS_AS(graph_spec_from_json(json{{"inter_edge_prob", 1.5}}), InvalidConfig);
}
