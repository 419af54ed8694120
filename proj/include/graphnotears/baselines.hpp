#pragma once

#include <string>

#include "graphnotears/solver.hpp"

namespace gnt {

// Two-step baseline: a static acyclicity-constrained solve for W that ignores
// the lagged blocks, then an unconstrained L1 regression of the residual-free
// responses on the aggregated lagged features for P.
inline FitResult fit_notears_lasso(const StackedDesign& design,
                                   const SolverConfig& cfg) {
  const FitResult step_w =
      detail::fit_penalized(design, cfg, detail::FitMode{true, false, true});
  const FitResult step_p =
      detail::fit_penalized(design, cfg, detail::FitMode{false, true, false});

  FitResult result = step_w;
  result.P_cont = step_p.P_cont;
  result.P_thresh = step_p.P_thresh;
  result.P_bin = step_p.P_bin;
  result.converged = step_w.converged && step_p.converged;
  // Joint score of the two independently fitted blocks.
  result.objective_final =
      ls_loss(result.W_cont, result.P_cont_stacked(), design) +
      cfg.lambda_w * result.W_cont.cwiseAbs().sum() +
      cfg.lambda_p * result.P_cont_stacked().cwiseAbs().sum();
  return result;
}

// Time-series baseline: identical objective and schedule, but the lag blocks
// are the raw features X^(t-l), with no interaction aggregation.
inline FitResult fit_dynotears(const DynamicGraphDataset& ds, const LagSpec& lags,
                               const SolverConfig& cfg) {
  const StackedDesign design = build_stacked_raw(ds, lags);
  return detail::fit_penalized(design, cfg, detail::FitMode{true, true, true});
}

}  // namespace gnt
