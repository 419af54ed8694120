#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "graphnotears/design.hpp"
#include "graphnotears/expm.hpp"
#include "graphnotears/lbfgsb.hpp"

namespace gnt {

// Hyperparameters of the penalized solve. The augmented-Lagrangian schedule
// follows the standard published constants; everything is overridable.
struct SolverConfig {
  double lambda_w = 0.01;  // L1 coefficient on W
  double lambda_p = 0.01;  // L1 coefficient on P
  double tau_w = 0.3;      // hard threshold on W
  double tau_p = 0.3;      // hard threshold on P

  double rho_init = 1.0;
  double alpha_init = 0.0;
  double rho_mult = 10.0;
  double rho_max = 1e16;
  double progress_ratio = 0.25;
  double h_tol = 1e-8;
  int max_dual_iters = 100;

  int inner_max_iters = 500;
  double inner_grad_tol = 1e-6;
  int lbfgs_memory = 10;

  void validate() const {
    if (lambda_w < 0 || lambda_p < 0 || tau_w < 0 || tau_p < 0) {
      throw InvalidConfig("solver config: penalties and thresholds must be >= 0");
    }
    if (rho_init <= 0 || rho_max <= 0 || h_tol < 0 || inner_grad_tol < 0) {
      throw InvalidConfig("solver config: rho_init, rho_max, tolerances must be positive");
    }
    if (rho_mult <= 1.0) throw InvalidConfig("solver config: rho_mult must be > 1");
    if (progress_ratio <= 0.0 || progress_ratio >= 1.0) {
      throw InvalidConfig("solver config: progress_ratio must be in (0,1)");
    }
    if (max_dual_iters < 1 || inner_max_iters < 1 || lbfgs_memory < 1) {
      throw InvalidConfig("solver config: iteration counts must be >= 1");
    }
  }
};

struct OuterIterStat {
  double rho = 0.0;
  double alpha = 0.0;
  double h = 0.0;
  double objective = 0.0;
  int inner_iters = 0;
};

// Continuous, thresholded ("tilde") and binary ("hat") estimates plus solve
// diagnostics. P matrices are reported per lag, in LagSpec order.
struct FitResult {
  Matrix W_cont, W_thresh, W_bin;
  std::vector<Matrix> P_cont, P_thresh, P_bin;
  double h_final = 0.0;
  double objective_final = 0.0;
  int dual_iters = 0;
  bool converged = false;
  int cycle_edges_removed = 0;  // edges dropped to repair a cyclic W_bin
  std::vector<OuterIterStat> history;

  Matrix P_cont_stacked() const {
    const Index d = W_cont.rows();
    Matrix P(static_cast<Index>(P_cont.size()) * d, d);
    for (std::size_t i = 0; i < P_cont.size(); ++i) {
      P.middleRows(static_cast<Index>(i) * d, d) = P_cont[i];
    }
    return P;
  }
};

// Least-squares score (1 / 2 n_eff) ||X - X W - AM P||_F^2 with P stacked
// (p d x d). Computed from the explicit residual so a zero-noise design
// evaluates to zero up to round-off, not to Gram-cancellation error.
inline double ls_loss(const Matrix& W, const Matrix& P,
                      const StackedDesign& design) {
  if (W.rows() != design.d() || W.cols() != design.d()) {
    throw ShapeMismatch("ls_loss: W must be d x d");
  }
  if (P.rows() != design.AM.cols() || P.cols() != design.d()) {
    throw ShapeMismatch("ls_loss: P must be pd x d");
  }
  const Matrix R = design.X - design.X * W - design.AM * P;
  return R.squaredNorm() / (2.0 * static_cast<double>(design.n_eff));
}

// Analytic gradients of ls_loss:
//   d/dW = -(1/n) X^T R,   d/dP = -(1/n) AM^T R,   R = X - X W - AM P.
inline std::pair<Matrix, Matrix> ls_grad(const Matrix& W, const Matrix& P,
                                         const StackedDesign& design) {
  if (W.rows() != design.d() || W.cols() != design.d()) {
    throw ShapeMismatch("ls_grad: W must be d x d");
  }
  if (P.rows() != design.AM.cols() || P.cols() != design.d()) {
    throw ShapeMismatch("ls_grad: P must be pd x d");
  }
  const double inv_n = 1.0 / static_cast<double>(design.n_eff);
  const Matrix R = design.X - design.X * W - design.AM * P;
  Matrix gw = -inv_n * (design.X.transpose() * R);
  Matrix gp = -inv_n * (design.AM.transpose() * R);
  return {std::move(gw), std::move(gp)};
}

// Acyclicity function h(W) = trace(exp(W o W)) - d; zero iff the support of W
// is a DAG, strictly positive otherwise.
inline double h_acyc(const Matrix& W) {
  if (W.rows() != W.cols()) throw ShapeMismatch("h_acyc: W must be square");
  const Matrix E = expm(W.cwiseProduct(W));
  return E.trace() - static_cast<double>(W.rows());
}

// Gradient of h_acyc: exp(W o W)^T o 2W.
inline Matrix h_grad(const Matrix& W) {
  if (W.rows() != W.cols()) throw ShapeMismatch("h_grad: W must be square");
  const Matrix E = expm(W.cwiseProduct(W));
  return E.transpose().cwiseProduct(2.0 * W);
}

// Hard threshold: entries strictly below tau in magnitude go to zero; an
// entry exactly equal to tau is kept.
inline Matrix threshold(const Matrix& M, double tau) {
  if (tau < 0.0) throw InvalidSpec("threshold: tau must be >= 0");
  return (M.array().abs() < tau).select(0.0, M);
}

namespace detail {

// Which parameter blocks the augmented-Lagrangian engine optimizes. All three
// estimators share the engine; they differ only here and in the design.
struct FitMode {
  bool fit_w = true;
  bool fit_p = true;
  bool constrain_acyclic = true;
};

// Removes, one at a time, the smallest-magnitude edge lying on a cycle until
// the support is acyclic. Mutates the thresholded matrix in place and returns
// the number of removed edges.
inline int break_cycles(Matrix& W_thresh) {
  const Index d = W_thresh.rows();
  int removed = 0;
  while (!is_acyclic(W_thresh)) {
    double best = std::numeric_limits<double>::infinity();
    Index bu = -1, bv = -1;
    for (Index u = 0; u < d; ++u) {
      for (Index v = 0; v < d; ++v) {
        if (W_thresh(u, v) == 0.0) continue;
        // Edge u->v lies on a cycle iff v reaches u.
        std::vector<bool> seen(static_cast<std::size_t>(d), false);
        std::vector<Index> stack{v};
        seen[static_cast<std::size_t>(v)] = true;
        bool reaches = false;
        while (!stack.empty() && !reaches) {
          const Index w = stack.back();
          stack.pop_back();
          if (w == u) { reaches = true; break; }
          for (Index z = 0; z < d; ++z) {
            if (W_thresh(w, z) != 0.0 && !seen[static_cast<std::size_t>(z)]) {
              seen[static_cast<std::size_t>(z)] = true;
              stack.push_back(z);
            }
          }
        }
        if (reaches && std::abs(W_thresh(u, v)) < best) {
          best = std::abs(W_thresh(u, v));
          bu = u;
          bv = v;
        }
      }
    }
    if (bu < 0) break;  // unreachable: a cyclic graph always has such an edge
    W_thresh(bu, bv) = 0.0;
    ++removed;
  }
  return removed;
}

// Augmented-Lagrangian engine over split nonnegative variables
// u = [W+; W-; P+; P-] (column-major vec), so the L1 terms are linear and the
// inner problem is smooth and box-constrained. The diagonal of W is fixed at
// zero through the bounds.
inline FitResult fit_penalized(const StackedDesign& design,
                               const SolverConfig& cfg, const FitMode& mode) {
  cfg.validate();
  const Index d = design.d();
  const Index pd = design.AM.cols();
  if (d < 1) throw ShapeMismatch("fit: design has no variables");

  const Index nw = mode.fit_w ? d * d : 0;
  const Index np = mode.fit_p ? pd * d : 0;
  const Index m = 2 * (nw + np);

  Vector lb = Vector::Zero(m);
  Vector ub = Vector::Constant(m, std::numeric_limits<double>::infinity());
  if (mode.fit_w) {
    for (Index j = 0; j < d; ++j) {
      const Index diag = j * d + j;  // column-major offset of W(j,j)
      ub[diag] = 0.0;
      ub[nw + diag] = 0.0;
    }
  }

  Matrix W = Matrix::Zero(d, d);
  Matrix P = Matrix::Zero(pd, d);
  Matrix R, E, gw_smooth, gp;

  double rho = cfg.rho_init;
  double alpha = cfg.alpha_init;

  const double inv_n = 1.0 / static_cast<double>(design.n_eff);

  // Objective and gradient over the split vector at the current (rho, alpha).
  const auto eval = [&](const Vector& u, Vector& grad) -> double {
    if (mode.fit_w) {
      W = Eigen::Map<const Matrix>(u.data(), d, d) -
          Eigen::Map<const Matrix>(u.data() + nw, d, d);
    }
    if (mode.fit_p) {
      P = Eigen::Map<const Matrix>(u.data() + 2 * nw, pd, d) -
          Eigen::Map<const Matrix>(u.data() + 2 * nw + np, pd, d);
    }

    R = design.X;
    if (mode.fit_w) R.noalias() -= design.X * W;
    if (mode.fit_p && pd > 0) R.noalias() -= design.AM * P;

    double f = 0.5 * inv_n * R.squaredNorm();
    f += cfg.lambda_w * u.head(2 * nw).sum();
    f += cfg.lambda_p * u.tail(2 * np).sum();

    double h = 0.0;
    if (mode.fit_w && mode.constrain_acyclic) {
      try {
        E = expm(W.cwiseProduct(W));
      } catch (const NumericalOverflow&) {
        return std::numeric_limits<double>::infinity();  // reject the point
      }
      h = E.trace() - static_cast<double>(d);
      f += 0.5 * rho * h * h + alpha * h;
    }
    if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();

    if (mode.fit_w) {
      gw_smooth.noalias() = -inv_n * (design.X.transpose() * R);
      if (mode.constrain_acyclic) {
        gw_smooth += (rho * h + alpha) * E.transpose().cwiseProduct(2.0 * W);
      }
      Eigen::Map<Matrix>(grad.data(), d, d) =
          (gw_smooth.array() + cfg.lambda_w).matrix();
      Eigen::Map<Matrix>(grad.data() + nw, d, d) =
          (-gw_smooth.array() + cfg.lambda_w).matrix();
    }
    if (mode.fit_p) {
      gp.noalias() = -inv_n * (design.AM.transpose() * R);
      Eigen::Map<Matrix>(grad.data() + 2 * nw, pd, d) =
          (gp.array() + cfg.lambda_p).matrix();
      Eigen::Map<Matrix>(grad.data() + 2 * nw + np, pd, d) =
          (-gp.array() + cfg.lambda_p).matrix();
    }
    return f;
  };

  BoxLbfgsOptions inner_opt;
  inner_opt.memory = cfg.lbfgs_memory;
  inner_opt.max_iters = cfg.inner_max_iters;
  inner_opt.grad_tol = cfg.inner_grad_tol;

  FitResult result;
  Vector u = Vector::Zero(m);
  double h_current = std::numeric_limits<double>::infinity();
  double objective = 0.0;
  bool h_ok = false;

  if (mode.fit_w && mode.constrain_acyclic) {
    for (int it = 0; it < cfg.max_dual_iters; ++it) {
      BoxLbfgsResult inner;
      double h_new = 0.0;
      while (true) {
        inner = minimize_box_lbfgs(eval, u, lb, ub, inner_opt);
        Vector dummy(m);
        eval(inner.x, dummy);  // refresh W for h at the solution
        h_new = h_acyc(W);
        if (h_new > cfg.progress_ratio * h_current && rho < cfg.rho_max) {
          rho *= cfg.rho_mult;
        } else {
          break;
        }
      }
      u = inner.x;
      h_current = h_new;
      objective = inner.f;
      alpha += rho * h_current;
      result.history.push_back({rho, alpha, h_current, objective, inner.iters});
      result.dual_iters = it + 1;
      if (h_current <= cfg.h_tol) {
        h_ok = true;
        break;
      }
      if (rho >= cfg.rho_max) break;
    }
  } else {
    // No equality constraint: a single penalized inner solve.
    const BoxLbfgsResult inner = minimize_box_lbfgs(eval, u, lb, ub, inner_opt);
    u = inner.x;
    objective = inner.f;
    result.history.push_back({0.0, 0.0, 0.0, objective, inner.iters});
    result.dual_iters = 1;
    h_ok = inner.converged;
  }

  // Materialize W, P from the final split vector.
  Vector dummy(m);
  if (!std::isfinite(eval(u, dummy))) {
    throw NumericalOverflow("fit: objective not finite at the returned iterate");
  }

  result.W_cont = W;
  result.h_final = mode.fit_w ? h_acyc(W) : 0.0;
  result.objective_final = objective;
  result.converged = h_ok;

  result.W_thresh = threshold(result.W_cont, cfg.tau_w);
  result.cycle_edges_removed = break_cycles(result.W_thresh);
  result.W_bin = (result.W_thresh.array() != 0.0).cast<double>().matrix();

  const int p = design.p();
  for (int i = 0; i < p; ++i) {
    Matrix Pi = P.middleRows(static_cast<Index>(i) * d, d);
    result.P_cont.push_back(Pi);
    Matrix Pt = threshold(Pi, cfg.tau_p);
    result.P_bin.push_back((Pt.array() != 0.0).cast<double>().matrix());
    result.P_thresh.push_back(std::move(Pt));
  }
  return result;
}

}  // namespace detail

// The joint estimator: minimizes the penalized least-squares score over W and
// P subject to h(W) = 0, by the augmented-Lagrangian outer loop with hard
// thresholding of the stationary point.
inline FitResult fit_graphnotears(const StackedDesign& design,
                                  const LagSpec& lags, const SolverConfig& cfg) {
  lags.validate();
  if (design.p() != lags.p()) {
    throw LagCountMismatch("fit_graphnotears: design has " +
                           std::to_string(design.p()) + " lag blocks, lag spec has " +
                           std::to_string(lags.p()));
  }
  return detail::fit_penalized(design, cfg, detail::FitMode{true, true, true});
}

}  // namespace gnt
