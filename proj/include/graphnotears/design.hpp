#pragma once

#include <map>
#include <string>
#include <vector>

#include "graphnotears/core.hpp"
#include "graphnotears/simulate.hpp"

namespace gnt {

// Which timestamps influence the current one. Lags need not be contiguous;
// [1,7] is as valid as [1] or [1,2].
struct LagSpec {
  std::vector<int> lags;

  LagSpec() = default;
  explicit LagSpec(std::vector<int> l) : lags(std::move(l)) { validate(); }

  static LagSpec contiguous(int p) {
    std::vector<int> l;
    for (int i = 1; i <= p; ++i) l.push_back(i);
    return LagSpec(std::move(l));
  }

  int p() const { return static_cast<int>(lags.size()); }
  int max_lag() const { return lags.empty() ? 0 : lags.back(); }

  void validate() const {
    if (lags.empty()) throw InvalidSpec("lag spec: at least one lag required");
    int prev = 0;
    for (int l : lags) {
      if (l <= prev) {
        throw InvalidSpec("lag spec: lags must be strictly increasing positive integers");
      }
      prev = l;
    }
  }
};

// Regression-ready stacking over target timestamps maxlag+1..T. Row block tau
// of X holds the responses X^(t); the matching rows of AM hold, per lag l in
// LagSpec order, the aggregated lagged features Ahat^(t-l) X^(t-l) (or the
// raw X^(t-l) when built without adjacency).
struct StackedDesign {
  Matrix X;          // (T - maxlag) n  x  d
  Matrix AM;         // (T - maxlag) n  x  p d
  Index n_eff = 0;   // stacked row count, the n of the 1/(2n) loss scaling

  Index d() const { return X.cols(); }
  int p() const { return d() == 0 ? 0 : static_cast<int>(AM.cols() / d()); }
};

namespace detail {

enum class LagBlock { kAggregated, kRaw };

inline StackedDesign build_stacked_impl(const DynamicGraphDataset& ds,
                                        const LagSpec& lags, LagBlock kind) {
  validate_dataset(ds);
  lags.validate();
  const Index T = ds.T();
  const int maxlag = lags.max_lag();
  if (maxlag >= T) {
    throw LagTooLarge("build_stacked: max lag " + std::to_string(maxlag) +
                      " must be < T=" + std::to_string(T));
  }

  const Index n = ds.n;
  const Index d = ds.d;
  const Index slices = T - maxlag;
  const int p = lags.p();

  // Each source timestamp is normalized once even when several targets use it.
  std::map<Index, Matrix> ahat;
  if (kind == LagBlock::kAggregated) {
    for (Index t = maxlag; t < T; ++t) {
      for (int l : lags.lags) {
        const Index src = t - l;
        if (!ahat.count(src)) {
          ahat.emplace(src, normalize_adjacency(ds.adjacency[static_cast<std::size_t>(src)]));
        }
      }
    }
  }

  StackedDesign design;
  design.X.resize(slices * n, d);
  design.AM.resize(slices * n, static_cast<Index>(p) * d);
  design.n_eff = slices * n;

  Index row = 0;
  for (Index t = maxlag; t < T; ++t) {
    design.X.middleRows(row, n) = ds.features[static_cast<std::size_t>(t)];
    for (int b = 0; b < p; ++b) {
      const Index src = t - lags.lags[static_cast<std::size_t>(b)];
      const Matrix& Xsrc = ds.features[static_cast<std::size_t>(src)];
      auto block = design.AM.block(row, static_cast<Index>(b) * d, n, d);
      if (kind == LagBlock::kAggregated) {
        block.noalias() = ahat.at(src) * Xsrc;
      } else {
        block = Xsrc;
      }
    }
    row += n;
  }
  return design;
}

}  // namespace detail

// The design of the compact SEM form: responses X and lagged predictor blocks
// Ahat^(t-l) X^(t-l), concatenated left-to-right in LagSpec order and stacked
// top-to-bottom in increasing target timestamp.
inline StackedDesign build_stacked(const DynamicGraphDataset& ds,
                                   const LagSpec& lags) {
  return detail::build_stacked_impl(ds, lags, detail::LagBlock::kAggregated);
}

// Same stacking with raw lagged features X^(t-l); this is the design the
// interaction-blind time-series baseline fits on.
inline StackedDesign build_stacked_raw(const DynamicGraphDataset& ds,
                                       const LagSpec& lags) {
  return detail::build_stacked_impl(ds, lags, detail::LagBlock::kRaw);
}

}  // namespace gnt
