#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "graphnotears/core.hpp"

namespace gnt {

struct SbmParams {
  int num_blocks = 2;
  double within_prob = 0.4;
  double between_prob = 0.025;
};

// Knobs for the synthetic generators. Intra-slice supports come from ER or BA
// graphs oriented by a random topological permutation; inter-slice supports
// from ER or SBM; edge weights are uniform in [-high,-low] u [low,high].
struct GraphModelSpec {
  enum class IntraModel { kEr, kBa };
  enum class InterModel { kEr, kSbm };

  IntraModel intra_model = IntraModel::kEr;
  InterModel inter_model = InterModel::kEr;
  double intra_mean_degree = 2.0;  // expected edges per node (ER); attachment count (BA)
  double inter_edge_prob = 0.1;
  std::optional<SbmParams> sbm;  // defaults derived from inter_edge_prob when unset
  double weight_low = 0.5;
  double weight_high = 2.0;
  double interaction_prob = 0.1;
  bool static_adjacency = false;

  SbmParams sbm_params() const {
    if (sbm) return *sbm;
    return SbmParams{2, std::min(1.0, inter_edge_prob * 4.0),
                     inter_edge_prob / 4.0};
  }
};

inline std::string to_string(GraphModelSpec::IntraModel m) {
  return m == GraphModelSpec::IntraModel::kEr ? "er" : "ba";
}
inline std::string to_string(GraphModelSpec::InterModel m) {
  return m == GraphModelSpec::InterModel::kEr ? "er" : "sbm";
}

inline void validate_spec(const GraphModelSpec& spec) {
  if (spec.intra_mean_degree < 0.0) {
    throw InvalidSpec("graph spec: intra_mean_degree must be >= 0");
  }
  if (spec.inter_edge_prob < 0.0 || spec.inter_edge_prob > 1.0) {
    throw InvalidSpec("graph spec: inter_edge_prob must be in [0,1]");
  }
  if (!(spec.weight_low > 0.0) || !(spec.weight_high > spec.weight_low)) {
    throw InvalidSpec("graph spec: need 0 < weight_low < weight_high");
  }
  if (spec.interaction_prob < 0.0 || spec.interaction_prob > 1.0) {
    throw InvalidSpec("graph spec: interaction_prob must be in [0,1]");
  }
  const SbmParams sbm = spec.sbm_params();
  if (sbm.num_blocks < 1) throw InvalidSpec("graph spec: sbm num_blocks must be >= 1");
  if (sbm.within_prob < 0.0 || sbm.within_prob > 1.0 || sbm.between_prob < 0.0 ||
      sbm.between_prob > 1.0) {
    throw InvalidSpec("graph spec: sbm probabilities must be in [0,1]");
  }
}

namespace detail {

// Undirected ER skeleton: each unordered pair connected with prob p.
inline std::vector<std::pair<int, int>> er_undirected(int d, double p, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      if (rng.bernoulli(p)) edges.emplace_back(j, k);
    }
  }
  return edges;
}

// Undirected BA skeleton via the repeated-nodes scheme: vertex v >= m attaches
// to m distinct earlier vertices drawn proportional to degree.
inline std::vector<std::pair<int, int>> ba_undirected(int d, int m, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  if (d < 2) return edges;
  m = std::clamp(m, 1, d - 1);
  std::vector<int> repeated;
  for (int v = m; v < d; ++v) {
    std::set<int> targets;
    if (v == m) {
      for (int t = 0; t < m; ++t) targets.insert(t);
    } else {
      while (static_cast<int>(targets.size()) < m) {
        targets.insert(repeated[rng.uniform_int(repeated.size())]);
      }
    }
    for (int t : targets) {
      edges.emplace_back(t, v);
      repeated.push_back(t);
      repeated.push_back(v);
    }
  }
  return edges;
}

}  // namespace detail

// Acyclic binary intra-slice support: sample an undirected skeleton, then
// orient every edge from earlier to later in a uniformly random permutation.
inline Matrix gen_intra_dag(int d, const GraphModelSpec& spec, Rng& rng) {
  if (d < 1) throw InvalidSpec("gen_intra_dag: d must be >= 1");
  validate_spec(spec);

  std::vector<std::pair<int, int>> edges;
  if (spec.intra_model == GraphModelSpec::IntraModel::kEr) {
    const double p = d > 1 ? std::min(1.0, spec.intra_mean_degree / (d - 1)) : 0.0;
    edges = detail::er_undirected(d, p, rng);
  } else {
    const int m = std::max(1, static_cast<int>(std::llround(spec.intra_mean_degree)));
    edges = detail::ba_undirected(d, m, rng);
  }

  const std::vector<int> perm = rng.permutation(d);
  std::vector<int> rank(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) rank[static_cast<std::size_t>(perm[i])] = i;

  Matrix B = Matrix::Zero(d, d);
  for (const auto& [a, b] : edges) {
    if (rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)]) {
      B(a, b) = 1.0;
    } else {
      B(b, a) = 1.0;
    }
  }
  return B;
}

// Binary inter-slice support for one lag. Entries are directed lag -> current
// and need no acyclicity; ER draws each of the d^2 entries independently
// (self-lag included), SBM uses within/between block probabilities.
inline Matrix gen_inter_support(int d, const GraphModelSpec& spec, Rng& rng) {
  if (d < 1) throw InvalidSpec("gen_inter_support: d must be >= 1");
  validate_spec(spec);

  Matrix B = Matrix::Zero(d, d);
  if (spec.inter_model == GraphModelSpec::InterModel::kEr) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        if (rng.bernoulli(spec.inter_edge_prob)) B(j, k) = 1.0;
      }
    }
  } else {
    const SbmParams sbm = spec.sbm_params();
    std::vector<int> block(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) {
      block[static_cast<std::size_t>(v)] =
          static_cast<int>(static_cast<long long>(v) * sbm.num_blocks / d);
    }
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        const double p = block[static_cast<std::size_t>(j)] ==
                                 block[static_cast<std::size_t>(k)]
                             ? sbm.within_prob
                             : sbm.between_prob;
        if (rng.bernoulli(p)) B(j, k) = 1.0;
      }
    }
  }
  return B;
}

// Weighted matrix from a binary support: magnitude uniform in
// [weight_low, weight_high], sign a fair coin per edge.
inline Matrix assign_weights(const Matrix& support, const GraphModelSpec& spec,
                             Rng& rng) {
  validate_spec(spec);
  Matrix W = Matrix::Zero(support.rows(), support.cols());
  for (Index j = 0; j < support.rows(); ++j) {
    for (Index k = 0; k < support.cols(); ++k) {
      if (support(j, k) != 0.0) {
        const double mag = rng.uniform(spec.weight_low, spec.weight_high);
        W(j, k) = rng.bernoulli(0.5) ? mag : -mag;
      }
    }
  }
  return W;
}

// Symmetric zero-diagonal interaction graph; each unordered pair connected
// independently with probability `prob`.
inline Matrix gen_interaction_graph(int n, double prob, Rng& rng) {
  if (n < 1) throw InvalidSpec("gen_interaction_graph: n must be >= 1");
  if (prob < 0.0 || prob > 1.0) {
    throw InvalidSpec("gen_interaction_graph: prob must be in [0,1]");
  }
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.bernoulli(prob)) {
        A(i, j) = 1.0;
        A(j, i) = 1.0;
      }
    }
  }
  return A;
}

// One interaction graph per timestamp, or a single draw reused for all t when
// static_adjacency is set.
inline std::vector<Matrix> gen_adjacency_series(int n, int T,
                                                const GraphModelSpec& spec,
                                                Rng& rng) {
  std::vector<Matrix> series;
  series.reserve(static_cast<std::size_t>(T));
  if (spec.static_adjacency) {
    const Matrix A = gen_interaction_graph(n, spec.interaction_prob, rng);
    series.assign(static_cast<std::size_t>(T), A);
  } else {
    for (int t = 0; t < T; ++t) {
      series.push_back(gen_interaction_graph(n, spec.interaction_prob, rng));
    }
  }
  return series;
}

// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I, so isolated
// nodes keep a unit self-weight and D is always invertible.
inline Matrix normalize_adjacency(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw ShapeMismatch("normalize_adjacency: matrix must be square");
  }
  const Vector dinv_sqrt =
      (A.rowwise().sum().array() + 1.0).rsqrt().matrix();
  Matrix result = A;
  result.diagonal().array() += 1.0;
  return dinv_sqrt.asDiagonal() * result * dinv_sqrt.asDiagonal();
}

// Convenience draw of a full generating model: W first, then P lag 1..p.
inline GroundTruthModel gen_ground_truth(int d, int p, const GraphModelSpec& spec,
                                         Rng& rng) {
  GroundTruthModel truth;
  truth.W = assign_weights(gen_intra_dag(d, spec, rng), spec, rng);
  truth.P.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    truth.P.push_back(assign_weights(gen_inter_support(d, spec, rng), spec, rng));
  }
  return truth;
}

// Generates features per the structural VAR: at each timestamp, columns are
// filled in the topological order of W so each variable sees only its already
// generated parents,
//   X^(t)_{:,j} = X^(t) W_{:,j} + sum_i Ahat^(t-i) X^(t-i) P^(i)_{:,j} + Z_{:,j}.
// The first p timestamps (burn-in) use the intra-slice term plus unit-scale
// noise of the same kind: they only seed the recursion, and keeping their
// scale fixed means the signal does not vanish as the innovation scale goes
// to zero. `noise.scale` applies to the innovations of the generated window
// t > p. `noise_out`, when given, receives the realized Z^(t) per timestamp.
inline DynamicGraphDataset simulate_sem(const GroundTruthModel& truth,
                                        const std::vector<Matrix>& adjacency,
                                        const NoiseSpec& noise, Rng& rng,
                                        std::vector<Matrix>* noise_out = nullptr) {
  const auto T = static_cast<Index>(adjacency.size());
  validate_truth(truth, T);
  if (adjacency.empty()) throw ShapeMismatch("simulate_sem: empty adjacency series");
  const Index n = adjacency.front().rows();
  const Index d = truth.d();
  const int p = truth.p();

  const auto topo_opt = topological_order(truth.W);
  if (!topo_opt) throw CyclicW("simulate_sem: support of W has a cycle");
  const std::vector<int>& topo = *topo_opt;

  std::vector<Matrix> ahat;
  ahat.reserve(adjacency.size());
  for (const Matrix& A : adjacency) {
    if (A.rows() != n || A.cols() != n) {
      throw ShapeMismatch("simulate_sem: adjacency matrices must share shape n x n");
    }
    ahat.push_back(normalize_adjacency(A));
  }

  DynamicGraphDataset ds;
  ds.n = n;
  ds.d = d;
  ds.adjacency = adjacency;
  ds.features.reserve(static_cast<std::size_t>(T));
  if (noise_out) noise_out->clear();

  const NoiseSpec seed_noise{noise.kind, 1.0};
  for (Index t = 0; t < T; ++t) {
    const NoiseSpec& draw = t < p ? seed_noise : noise;
    Matrix Z(n, d);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) Z(i, j) = draw.sample(rng);
    }
    if (noise_out) noise_out->push_back(Z);

    Matrix lag_term = Matrix::Zero(n, d);
    if (t >= p) {
      for (int i = 1; i <= p; ++i) {
        lag_term.noalias() +=
            ahat[static_cast<std::size_t>(t - i)] *
            ds.features[static_cast<std::size_t>(t - i)] *
            truth.P[static_cast<std::size_t>(i - 1)];
      }
    }

    Matrix X = Matrix::Zero(n, d);
    for (int j : topo) {
      X.col(j) = X * truth.W.col(j) + lag_term.col(j) + Z.col(j);
    }
    ds.features.push_back(std::move(X));
  }
  return ds;
}

}  // namespace gnt
