#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphnotears/rng.hpp"
#include "graphnotears/types.hpp"

namespace gnt {

// Centered error distribution for the SEM. `scale` is the standard deviation
// for Gaussian noise and the mean (1/rate) for Exponential noise; the
// exponential draw is shifted by its mean so every error variable is
// zero-mean.
struct NoiseSpec {
  enum class Kind { kGaussian, kExponential };

  Kind kind = Kind::kGaussian;
  double scale = 1.0;

  double sample(Rng& rng) const {
    if (scale <= 0.0) throw InvalidSpec("NoiseSpec: scale must be > 0");
    switch (kind) {
      case Kind::kGaussian:
        return rng.normal(scale);
      case Kind::kExponential:
        return rng.exponential(scale) - scale;
    }
    throw InvalidSpec("NoiseSpec: unknown kind");
  }
};

inline std::string to_string(NoiseSpec::Kind k) {
  return k == NoiseSpec::Kind::kGaussian ? "gaussian" : "exponential";
}

// Observed dynamic graph: per-timestamp node features X^(t) (n x d) and
// undirected interaction adjacencies A^(t) (n x n, binary, zero diagonal).
struct DynamicGraphDataset {
  Index n = 0;
  Index d = 0;
  std::vector<Matrix> features;
  std::vector<Matrix> adjacency;

  Index T() const { return static_cast<Index>(features.size()); }
};

// Generating parameters: intra-slice weights W (d x d, acyclic support) and
// one inter-slice weight matrix per lag, P[i] holding lag i+1.
struct GroundTruthModel {
  Matrix W;
  std::vector<Matrix> P;

  int p() const { return static_cast<int>(P.size()); }
  Index d() const { return W.rows(); }
};

// Kahn's algorithm over the support of `B` (entry (u,v) != 0 means edge
// u -> v). Returns std::nullopt when the graph has a cycle.
inline std::optional<std::vector<int>> topological_order(const Matrix& B) {
  if (B.rows() != B.cols()) {
    throw ShapeMismatch("topological_order: matrix must be square");
  }
  const int d = static_cast<int>(B.rows());
  std::vector<int> indegree(static_cast<std::size_t>(d), 0);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      if (B(i, j) != 0.0) ++indegree[static_cast<std::size_t>(j)];
    }
  }
  std::vector<int> queue;
  queue.reserve(static_cast<std::size_t>(d));
  for (int v = 0; v < d; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
  }
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(d));
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    order.push_back(u);
    for (int v = 0; v < d; ++v) {
      if (B(u, v) != 0.0 && --indegree[static_cast<std::size_t>(v)] == 0) {
        queue.push_back(v);
      }
    }
  }
  if (static_cast<int>(order.size()) != d) return std::nullopt;
  return order;
}

inline bool is_acyclic(const Matrix& B) {
  return topological_order(B).has_value();
}

// Checks every DynamicGraphDataset invariant; throws the first violation.
inline void validate_dataset(const DynamicGraphDataset& ds) {
  if (ds.n < 1 || ds.d < 1) {
    throw ShapeMismatch("dataset: n and d must be positive");
  }
  if (ds.T() < 2) {
    throw ShapeMismatch("dataset: T must be >= 2");
  }
  if (ds.adjacency.size() != ds.features.size()) {
    throw ShapeMismatch("dataset: features and adjacency must have equal length");
  }
  for (std::size_t t = 0; t < ds.features.size(); ++t) {
    const Matrix& X = ds.features[t];
    const Matrix& A = ds.adjacency[t];
    if (X.rows() != ds.n || X.cols() != ds.d) {
      throw ShapeMismatch("dataset: feature matrix " + std::to_string(t + 1) +
                          " is not n x d");
    }
    if (A.rows() != ds.n || A.cols() != ds.n) {
      throw ShapeMismatch("dataset: adjacency matrix " + std::to_string(t + 1) +
                          " is not n x n");
    }
    if (!is_binary01(A)) {
      throw NonBinaryAdjacency("dataset: adjacency matrix " +
                               std::to_string(t + 1) + " has entries outside {0,1}");
    }
    if ((A.array() != A.transpose().array()).any()) {
      throw AsymmetricAdjacency("dataset: adjacency matrix " +
                                std::to_string(t + 1) + " is not symmetric");
    }
    if ((A.diagonal().array() != 0.0).any()) {
      throw SelfLoop("dataset: adjacency matrix " + std::to_string(t + 1) +
                     " has a nonzero diagonal");
    }
  }
}

// GroundTruthModel invariants, relative to a series of length T.
inline void validate_truth(const GroundTruthModel& truth, Index T) {
  if (truth.W.rows() != truth.W.cols()) {
    throw ShapeMismatch("truth: W must be square");
  }
  for (std::size_t i = 0; i < truth.P.size(); ++i) {
    if (truth.P[i].rows() != truth.d() || truth.P[i].cols() != truth.d()) {
      throw ShapeMismatch("truth: P lag " + std::to_string(i + 1) +
                          " is not d x d");
    }
  }
  if (truth.p() < 1) throw InvalidSpec("truth: p must be >= 1");
  if (truth.p() >= T) {
    throw LagTooLarge("truth: autoregression order p=" +
                      std::to_string(truth.p()) + " must be < T=" +
                      std::to_string(T));
  }
  if (!is_acyclic(truth.W)) {
    throw CyclicW("truth: support of W has a cycle");
  }
}

}  // namespace gnt
