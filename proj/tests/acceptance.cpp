// Acceptance suite: end-to-end checks of recovery quality, baseline ordering,
// gradient and oracle agreement, and determinism. Prints one line per
// criterion and exits nonzero if any fails.

#include <atomic>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "graphnotears/graphnotears.hpp"
#include "oracles.hpp"

using namespace gnt;

namespace {

struct FitOutcome {
  GridCell cell;
  FitResult fit;
  EdgeMetrics w;
  EdgeMetrics p_pooled;
  std::vector<EdgeMetrics> p_per_lag;
  double w_cont_err_on_true_edges = 0.0;
  double penalized_at_truth = 0.0;  // ls + L1 of the generating parameters
  double penalized_at_fit = 0.0;
  double seconds = 0.0;
};

// F1 scores are ratios of small integers; criterion thresholds such as 0.8
// can be attained exactly, so the mean-vs-threshold comparisons are done in
// exact rational arithmetic instead of floating point.
struct Frac {
  __int128 num = 0;
  __int128 den = 1;

  static Frac of(long long n, long long d) { return Frac{n, d}.reduced(); }

  Frac reduced() const {
    __int128 a = num < 0 ? -num : num, b = den < 0 ? -den : den;
    while (b) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    Frac r{num, den};
    if (a > 1) {
      r.num /= a;
      r.den /= a;
    }
    if (r.den < 0) {
      r.den = -r.den;
      r.num = -r.num;
    }
    return r;
  }

  Frac operator+(const Frac& o) const {
    return Frac{num * o.den + o.num * den, den * o.den}.reduced();
  }
  Frac operator-(const Frac& o) const {
    return Frac{num * o.den - o.num * den, den * o.den}.reduced();
  }
  bool operator>=(const Frac& o) const { return num * o.den >= o.num * den; }
  bool operator>(const Frac& o) const { return num * o.den > o.num * den; }
  bool operator<=(const Frac& o) const { return num * o.den <= o.num * den; }

  double value() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

Frac f1_frac(const EdgeMetrics& m) {
  const long long den = 2 * m.tp + m.fp + m.fn + 2 * m.reversed;
  if (den == 0) return Frac::of(1, 1);  // empty estimate against empty truth
  return Frac::of(2 * m.tp, den);
}

GridCell make_cell(int n, int d, int p, const std::string& method,
                   std::uint64_t seed, double noise_scale = 1.0) {
  GridCell cell;
  cell.n = n;
  cell.d = d;
  cell.T = 7;
  for (int l = 1; l <= p; ++l) cell.lags.push_back(l);
  cell.intra = GraphModelSpec::IntraModel::kEr;
  cell.inter = GraphModelSpec::InterModel::kEr;
  cell.noise = {NoiseSpec::Kind::kGaussian, noise_scale};
  cell.method = method;
  cell.seed = seed;
  return cell;
}

FitOutcome run_fit(const GridCell& cell) {
  const GraphModelSpec base;  // library defaults, recorded in every run record
  const SolverConfig solver;

  GraphModelSpec spec = base;
  spec.intra_model = cell.intra;
  spec.inter_model = cell.inter;

  Rng rng(cell.dataset_seed());
  const LagSpec lags(cell.lags);
  const GroundTruthModel truth = gen_ground_truth(cell.d, lags.max_lag(), spec, rng);
  const auto adjacency = gen_adjacency_series(cell.n, cell.T, spec, rng);
  const auto ds = simulate_sem(truth, adjacency, cell.noise, rng);

  const auto t0 = std::chrono::steady_clock::now();
  FitOutcome out;
  out.cell = cell;
  if (cell.method == "graphnotears") {
    out.fit = fit_graphnotears(build_stacked(ds, lags), lags, solver);
  } else if (cell.method == "notears_lasso") {
    out.fit = fit_notears_lasso(build_stacked(ds, lags), solver);
  } else {
    out.fit = fit_dynotears(ds, lags, solver);
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const Matrix truth_w = (truth.W.array() != 0.0).cast<double>().matrix();
  std::vector<Matrix> truth_p;
  for (const Matrix& P : truth.P) {
    truth_p.push_back((P.array() != 0.0).cast<double>().matrix());
  }
  out.w = score_intra(out.fit.W_bin, truth_w);
  out.p_per_lag = score_inter(out.fit.P_bin, truth_p);
  out.p_pooled = score_inter_pooled(out.fit.P_bin, truth_p);
  for (Index i = 0; i < truth.W.size(); ++i) {
    if (truth.W(i) != 0.0) {
      out.w_cont_err_on_true_edges = std::max(
          out.w_cont_err_on_true_edges, std::abs(out.fit.W_cont(i) - truth.W(i)));
    }
  }

  const auto design = build_stacked(ds, lags);
  Matrix P_true(static_cast<Index>(truth.P.size()) * cell.d, cell.d);
  for (std::size_t i = 0; i < truth.P.size(); ++i) {
    P_true.middleRows(static_cast<Index>(i) * cell.d, cell.d) = truth.P[i];
  }
  const auto penalized = [&](const Matrix& W, const Matrix& P) {
    return ls_loss(W, P, design) +
           solver.lambda_w * W.cwiseAbs().sum() + solver.lambda_p * P.cwiseAbs().sum();
  };
  out.penalized_at_truth = penalized(truth.W, P_true);
  out.penalized_at_fit = penalized(out.fit.W_cont, out.fit.P_cont_stacked());
  return out;
}

std::vector<FitOutcome> run_all(const std::vector<GridCell>& cells, int jobs = 2) {
  std::vector<FitOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      outcomes[i] = run_fit(cells[i]);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return outcomes;
}

double mean_of(const std::vector<FitOutcome>& outs,
               const std::function<double(const FitOutcome&)>& get) {
  double sum = 0.0;
  for (const auto& o : outs) sum += get(o);
  return outs.empty() ? 0.0 : sum / static_cast<double>(outs.size());
}

Frac sum_f1(const std::vector<FitOutcome>& outs,
            const std::function<const EdgeMetrics&(const FitOutcome&)>& get) {
  Frac s = Frac::of(0, 1);
  for (const auto& o : outs) s = s + f1_frac(get(o));
  return s;
}

std::vector<FitOutcome> select(const std::vector<FitOutcome>& outs, int n, int d,
                               const std::string& method) {
  std::vector<FitOutcome> sel;
  for (const auto& o : outs) {
    if (o.cell.n == n && o.cell.d == d && o.cell.method == method) sel.push_back(o);
  }
  return sel;
}

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

}  // namespace

int main() {
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const std::vector<std::string> methods{"graphnotears", "notears_lasso",
                                         "dynotears"};

  std::vector<FitOutcome> all_fits;  // pooled for the acyclicity criterion

  // --- Criteria 1 + 2: headline recovery and baseline ordering ------------
  {
    std::vector<GridCell> cells;
    for (const auto& m : methods) {
      for (const auto s : seeds) cells.push_back(make_cell(500, 5, 1, m, s));
    }
    const auto outs = run_all(cells);
    all_fits.insert(all_fits.end(), outs.begin(), outs.end());

    const auto gnt_outs = select(outs, 500, 5, "graphnotears");
    const auto w_of = [](const FitOutcome& o) -> const EdgeMetrics& { return o.w; };
    const auto p_of = [](const FitOutcome& o) -> const EdgeMetrics& {
      return o.p_pooled;
    };
    const Frac f1w = sum_f1(gnt_outs, w_of);
    const Frac f1p = sum_f1(gnt_outs, p_of);
    const double secs = mean_of(gnt_outs, [](const auto& o) { return o.seconds; });
    report(1, f1w >= Frac::of(19, 4) && f1p >= Frac::of(9, 2),  // 5*(0.95), 5*(0.90)
           fmt("Gaussian n=500 d=5 p=1 ER/ER: mean F1(W)=%.4f (need >=0.95), "
               "mean F1(P)=%.4f (need >=0.90), %.1fs/seed",
               f1w.value() / 5, f1p.value() / 5, secs));

    const Frac f1p_nl = sum_f1(select(outs, 500, 5, "notears_lasso"), p_of);
    const Frac f1p_dyn = sum_f1(select(outs, 500, 5, "dynotears"), p_of);
    const Frac margin = Frac::of(1, 4);  // 5 * 0.05
    report(2, f1p - f1p_dyn >= margin && f1p - f1p_nl >= margin,
           fmt("mean F1(P): graphnotears=%.4f vs dynotears=%.4f, "
               "notears_lasso=%.4f (margin >=0.05 each)",
               f1p.value() / 5, f1p_dyn.value() / 5, f1p_nl.value() / 5));
  }

  // --- Criterion 3: second-order lag recovery -----------------------------
  {
    std::vector<GridCell> cells;
    for (const auto s : seeds) cells.push_back(make_cell(500, 5, 2, "graphnotears", s));
    const auto outs = run_all(cells);
    all_fits.insert(all_fits.end(), outs.begin(), outs.end());

    const Frac f1_lag1 = sum_f1(
        outs, [](const FitOutcome& o) -> const EdgeMetrics& { return o.p_per_lag[0]; });
    const Frac f1_lag2 = sum_f1(
        outs, [](const FitOutcome& o) -> const EdgeMetrics& { return o.p_per_lag[1]; });
    const Frac bar = Frac::of(4, 1);  // 5 * 0.8
    report(3, f1_lag1 >= bar && f1_lag2 >= bar,
           fmt("p=2 n=500 d=5: mean F1(P1)=%.4f, mean F1(P2)=%.4f (need >=0.8)",
               f1_lag1.value() / 5, f1_lag2.value() / 5));
  }

  // --- Criterion 4: degradation trend at n=100 ----------------------------
  {
    std::vector<GridCell> cells;
    for (const auto& m : methods) {
      for (const int d : {5, 30}) {
        for (const auto s : seeds) cells.push_back(make_cell(100, d, 1, m, s));
      }
    }
    const auto outs = run_all(cells);
    all_fits.insert(all_fits.end(), outs.begin(), outs.end());

    const auto w_of = [](const FitOutcome& o) -> const EdgeMetrics& { return o.w; };
    const auto p_of = [](const FitOutcome& o) -> const EdgeMetrics& {
      return o.p_pooled;
    };
    bool monotone = true;
    std::string detail = "n=100:";
    Frac gnt30, nl30, dyn30;
    for (const auto& m : methods) {
      const Frac w5 = sum_f1(select(outs, 100, 5, m), w_of);
      const Frac w30 = sum_f1(select(outs, 100, 30, m), w_of);
      const Frac p5 = sum_f1(select(outs, 100, 5, m), p_of);
      const Frac p30 = sum_f1(select(outs, 100, 30, m), p_of);
      monotone = monotone && w30 <= w5 && p30 <= p5;
      detail += fmt(" %s W %.3f->%.3f P %.3f->%.3f;", m.c_str(), w5.value() / 5,
                    w30.value() / 5, p5.value() / 5, p30.value() / 5);
      if (m == "graphnotears") gnt30 = p30;
      if (m == "notears_lasso") nl30 = p30;
      if (m == "dynotears") dyn30 = p30;
    }
    const bool still_ahead = gnt30 > nl30 && gnt30 > dyn30;
    report(4, monotone && still_ahead,
           detail + fmt(" d=30 F1(P) lead: %.3f > %.3f, %.3f", gnt30.value() / 5,
                        nl30.value() / 5, dyn30.value() / 5));
  }

  // --- Criterion 5: acyclicity of every converged fit ---------------------
  {
    int converged = 0, violations = 0;
    for (const auto& o : all_fits) {
      if (!o.fit.converged) continue;
      ++converged;
      if (h_acyc(o.fit.W_cont) > 1e-8 || !is_acyclic(o.fit.W_bin)) ++violations;
    }
    report(5, converged > 0 && violations == 0,
           fmt("%d converged fits in criteria 1-4, %d acyclicity violations",
               converged, violations));
  }

  // --- Criterion 6: gradient correctness ----------------------------------
  {
    Rng rng(2026);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
      const int d = 2 + static_cast<int>(rng.uniform_int(9));   // up to 10
      const int p = 1 + static_cast<int>(rng.uniform_int(2));   // up to 2
      const int n = 10 + static_cast<int>(rng.uniform_int(30));
      const int T = 4;

      GraphModelSpec spec;
      spec.inter_edge_prob = 0.3;
      Rng data_rng(rng.next_u64());
      const auto truth = gen_ground_truth(d, std::min(p, T - 1), spec, data_rng);
      const auto adjacency = gen_adjacency_series(n, T, spec, data_rng);
      const auto ds = simulate_sem(truth, adjacency, NoiseSpec{}, data_rng);
      const auto design = build_stacked(ds, LagSpec::contiguous(std::min(p, T - 1)));

      Matrix W(d, d), P(design.AM.cols(), d);
      for (Index i = 0; i < W.size(); ++i) W(i) = rng.uniform(-0.8, 0.8);
      for (Index i = 0; i < P.size(); ++i) P(i) = rng.uniform(-0.8, 0.8);

      const auto [gw, gp] = ls_grad(W, P, design);
      const Matrix fdw = oracles::fd_grad(
          [&](const Matrix& w) { return ls_loss(w, P, design); }, W);
      const Matrix fdp = oracles::fd_grad(
          [&](const Matrix& q) { return ls_loss(W, q, design); }, P);
      const Matrix fdh =
          oracles::fd_grad([](const Matrix& w) { return h_acyc(w); }, W);

      worst = std::max(worst, oracles::grad_rel_err(gw, fdw));
      worst = std::max(worst, oracles::grad_rel_err(gp, fdp));
      worst = std::max(worst, oracles::grad_rel_err(h_grad(W), fdh));
    }
    report(6, worst < 1e-5,
           fmt("100 random instances (d<=10, p<=2): max grad rel err %.3g "
               "(need <1e-5)",
               worst));
  }

  // --- Criterion 7: small-scale oracle equivalence ------------------------
  {
    bool h_matches = true;
    for (int d = 1; d <= 3; ++d) {
      std::vector<std::pair<int, int>> pairs;
      for (int u = 0; u < d; ++u) {
        for (int v = 0; v < d; ++v) {
          if (u != v) pairs.emplace_back(u, v);
        }
      }
      for (unsigned code = 0; code < (1u << pairs.size()); ++code) {
        Matrix B = Matrix::Zero(d, d);
        for (std::size_t b = 0; b < pairs.size(); ++b) {
          if (code & (1u << b)) B(pairs[b].first, pairs[b].second) = 1.0;
        }
        const bool acyclic = is_acyclic(B);
        const double h = h_acyc(B);
        if (acyclic != (h <= 1e-8)) h_matches = false;
      }
    }

    const auto dags = oracles::all_dags(3);
    int shd_mismatches = 0;
    for (const Matrix& est : dags) {
      for (const Matrix& truth : dags) {
        if (score_intra(est, truth).shd != oracles::edit_distance_bfs(est, truth)) {
          ++shd_mismatches;
        }
      }
    }
    report(7, h_matches && shd_mismatches == 0,
           fmt("h oracle equivalence d<=3: %s; SHD vs brute force on %zu^2 DAG "
               "pairs: %d mismatches",
               h_matches ? "exact" : "broken", dags.size(), shd_mismatches));
  }

  // --- Criterion 8: noiseless identifiability -----------------------------
  {
    std::vector<GridCell> cells;
    for (const auto s : {seeds[0], seeds[1], seeds[2]}) {
      cells.push_back(make_cell(500, 5, 1, "graphnotears", s, 1e-6));
    }
    const auto outs = run_all(cells);
    bool exact = true;
    double max_err = 0.0;
    int fit_beats_truth = 0;
    for (const auto& o : outs) {
      exact = exact && o.w.f1 == 1.0 && o.p_pooled.f1 == 1.0;
      max_err = std::max(max_err, o.w_cont_err_on_true_edges);
      if (o.penalized_at_fit <= o.penalized_at_truth + 1e-9) ++fit_beats_truth;
    }
    report(8, exact && max_err <= 0.05,
           fmt("noise 1e-6, n=500 d=5: supports exact on all seeds: %s, max "
               "|W_cont - W_true| on true edges %.4f (need <=0.05)",
               exact ? "yes" : "no", max_err));
    // Diagnostic, not part of the criterion: at this noise scale the returned
    // point scores at least as well as the generating parameters under the
    // penalized objective — the score does not single out the truth once the
    // innovations vanish.
    std::printf("        note: penalized objective(fit) <= objective(truth) on "
                "%d/%zu seeds\n", fit_beats_truth, outs.size());
  }

  // --- Criterion 9: grid-cell determinism ---------------------------------
  {
    const GraphModelSpec base;
    const SolverConfig solver;
    const GridCell cell = make_cell(200, 5, 1, "graphnotears", 3);
    const GridRecord a = run_grid_cell(cell, base, solver);
    const GridRecord b = run_grid_cell(cell, base, solver);
    json ja = to_json(a), jb = to_json(b);
    ja.erase("seconds");
    jb.erase("seconds");
    report(9, ja == jb && a.error.empty(),
           fmt("repeated grid cell reproduces every metric exactly "
               "(f1_w=%.6f f1_p=%.6f shd_p=%ld)",
               a.w.f1, a.p_pooled.f1, a.p_pooled.shd));
  }

  std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "OK" : "FAILED",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
