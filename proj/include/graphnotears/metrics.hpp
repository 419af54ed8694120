#pragma once

#include <string>
#include <vector>

#include "graphnotears/types.hpp"

namespace gnt {

// Directed-edge confusion counts and derived scores against a ground-truth
// support. `reversed` is only populated for intra-slice comparisons; every
// inter-slice edge is inherently directed in time, so no reversal class
// exists there.
struct EdgeMetrics {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long reversed = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  long shd = 0;
};

namespace detail {

// 0/0 conventions: an empty estimate against an empty truth scores perfect;
// otherwise an empty denominator scores zero. Keeps aggregate curves NaN-free
// and identical across methods.
inline void finalize_metrics(EdgeMetrics& m, bool truth_empty, bool est_empty) {
  m.shd = m.fp + m.fn + m.reversed;
  if (truth_empty && est_empty) {
    m.precision = m.recall = m.f1 = 1.0;
    return;
  }
  const long pden = m.tp + m.fp + m.reversed;
  const long rden = m.tp + m.fn + m.reversed;
  m.precision = pden > 0 ? static_cast<double>(m.tp) / static_cast<double>(pden) : 0.0;
  m.recall = rden > 0 ? static_cast<double>(m.tp) / static_cast<double>(rden) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
}

}  // namespace detail

// Intra-slice scoring over ordered pairs (j,k), j != k. An estimated edge
// whose reverse is in the truth counts once as a reversal (cost 1 in SHD),
// not as a false positive plus a false negative.
inline EdgeMetrics score_intra(const Matrix& est, const Matrix& truth) {
  if (est.rows() != est.cols() || truth.rows() != truth.cols() ||
      est.rows() != truth.rows()) {
    throw ShapeMismatch("score_intra: matrices must be square and same size");
  }
  const Index d = est.rows();
  EdgeMetrics m;
  bool truth_empty = true, est_empty = true;
  for (Index j = 0; j < d; ++j) {
    for (Index k = 0; k < d; ++k) {
      if (j == k) continue;
      const bool e = est(j, k) != 0.0;
      const bool t = truth(j, k) != 0.0;
      const bool e_rev = est(k, j) != 0.0;
      const bool t_rev = truth(k, j) != 0.0;
      if (e) est_empty = false;
      if (t) truth_empty = false;
      if (e && t) ++m.tp;
      if (t && !e && e_rev) ++m.reversed;
      if (e && !t && !t_rev) ++m.fp;
      if (t && !e && !e_rev) ++m.fn;
    }
  }
  detail::finalize_metrics(m, truth_empty, est_empty);
  return m;
}

// Inter-slice scoring for one lag: plain entrywise confusion counts.
inline EdgeMetrics score_inter_single(const Matrix& est, const Matrix& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
    throw ShapeMismatch("score_inter: estimate and truth must share shape");
  }
  EdgeMetrics m;
  bool truth_empty = true, est_empty = true;
  for (Index j = 0; j < est.rows(); ++j) {
    for (Index k = 0; k < est.cols(); ++k) {
      const bool e = est(j, k) != 0.0;
      const bool t = truth(j, k) != 0.0;
      if (e) est_empty = false;
      if (t) truth_empty = false;
      if (e && t) ++m.tp;
      if (e && !t) ++m.fp;
      if (t && !e) ++m.fn;
    }
  }
  detail::finalize_metrics(m, truth_empty, est_empty);
  return m;
}

// Per-lag scores, one entry per lag in matching order.
inline std::vector<EdgeMetrics> score_inter(const std::vector<Matrix>& est,
                                            const std::vector<Matrix>& truth) {
  if (est.size() != truth.size()) {
    throw LagCountMismatch("score_inter: estimate has " +
                           std::to_string(est.size()) + " lags, truth has " +
                           std::to_string(truth.size()));
  }
  std::vector<EdgeMetrics> out;
  out.reserve(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    out.push_back(score_inter_single(est[i], truth[i]));
  }
  return out;
}

// Micro-average across lags: confusion counts pooled before deriving scores.
inline EdgeMetrics score_inter_pooled(const std::vector<Matrix>& est,
                                      const std::vector<Matrix>& truth) {
  if (est.size() != truth.size()) {
    throw LagCountMismatch("score_inter_pooled: lag count mismatch");
  }
  EdgeMetrics m;
  bool truth_empty = true, est_empty = true;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const EdgeMetrics mi = score_inter_single(est[i], truth[i]);
    m.tp += mi.tp;
    m.fp += mi.fp;
    m.fn += mi.fn;
    if ((est[i].array() != 0.0).any()) est_empty = false;
    if ((truth[i].array() != 0.0).any()) truth_empty = false;
  }
  detail::finalize_metrics(m, truth_empty, est_empty);
  return m;
}

// Macro-average across lags: mean of the per-lag f1 values.
inline double macro_f1(const std::vector<EdgeMetrics>& per_lag) {
  if (per_lag.empty()) return 1.0;
  double sum = 0.0;
  for (const EdgeMetrics& m : per_lag) sum += m.f1;
  return sum / static_cast<double>(per_lag.size());
}

}  // namespace gnt
