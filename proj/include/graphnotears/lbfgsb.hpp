#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "graphnotears/types.hpp"

namespace gnt {

struct BoxLbfgsOptions {
  int memory = 10;
  int max_iters = 500;
  double grad_tol = 1e-6;  // infinity norm of the projected gradient
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-20;
};

struct BoxLbfgsResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  double proj_grad_norm = 0.0;
  int iters = 0;
  bool converged = false;
};

// Projected limited-memory BFGS for min f(x) s.t. lb <= x <= ub.
//
// Directions come from the two-loop recursion applied to the gradient with
// binding coordinates masked out; the line search backtracks along the
// projection arc with an Armijo condition on the actual displacement. The
// callback fills the gradient and returns f; it may return +inf to reject a
// trial point, which only forces further backtracking.
inline BoxLbfgsResult minimize_box_lbfgs(
    const std::function<double(const Vector&, Vector&)>& fg, Vector x0,
    const Vector& lb, const Vector& ub, const BoxLbfgsOptions& opt) {
  const Index m = x0.size();
  if (lb.size() != m || ub.size() != m) {
    throw ShapeMismatch("lbfgsb: bounds must match variable count");
  }

  const auto project = [&](const Vector& v) -> Vector {
    return v.cwiseMax(lb).cwiseMin(ub);
  };

  BoxLbfgsResult res;
  res.x = project(std::move(x0));
  res.grad.resize(m);
  res.f = fg(res.x, res.grad);
  if (!std::isfinite(res.f)) {
    throw NumericalOverflow("lbfgsb: objective not finite at the start point");
  }

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  double gamma = 1.0;

  Vector masked(m), dir(m), x_new(m), g_new(m), alpha_buf;

  for (res.iters = 0; res.iters < opt.max_iters; ++res.iters) {
    res.proj_grad_norm = (res.x - project(res.x - res.grad)).cwiseAbs().maxCoeff();
    if (res.proj_grad_norm <= opt.grad_tol) {
      res.converged = true;
      return res;
    }

    // Coordinates pinned at a bound with the gradient pushing into it take no
    // part in the quasi-Newton model this iteration.
    std::vector<bool> binding(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
      const bool bind_lo = res.x[i] <= lb[i] && res.grad[i] >= 0.0;
      const bool bind_hi = res.x[i] >= ub[i] && res.grad[i] <= 0.0;
      binding[static_cast<std::size_t>(i)] = bind_lo || bind_hi;
      masked[i] = binding[static_cast<std::size_t>(i)] ? 0.0 : res.grad[i];
    }

    // Two-loop recursion on the masked gradient.
    dir = -masked;
    const int k = static_cast<int>(s_hist.size());
    alpha_buf.resize(k);
    for (int i = k - 1; i >= 0; --i) {
      alpha_buf[i] = rho_hist[static_cast<std::size_t>(i)] *
                     s_hist[static_cast<std::size_t>(i)].dot(dir);
      dir -= alpha_buf[i] * y_hist[static_cast<std::size_t>(i)];
    }
    dir *= gamma;
    for (int i = 0; i < k; ++i) {
      const double beta = rho_hist[static_cast<std::size_t>(i)] *
                          y_hist[static_cast<std::size_t>(i)].dot(dir);
      dir += (alpha_buf[i] - beta) * s_hist[static_cast<std::size_t>(i)];
    }
    for (Index i = 0; i < m; ++i) {
      if (binding[static_cast<std::size_t>(i)]) dir[i] = 0.0;
    }

    if (dir.dot(masked) >= 0.0) {  // not a descent direction; drop the memory
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      gamma = 1.0;
      dir = -masked;
    }

    double step = 1.0;
    if (s_hist.empty()) {
      const double dnorm = dir.norm();
      if (dnorm > 1.0) step = 1.0 / dnorm;
    }

    // Backtracking Armijo search along the projection arc, shrinking by
    // quadratic interpolation where the model is sane.
    bool accepted = false;
    double f_new = res.f;
    bool retried_steepest = false;
    const double dir_deriv = res.grad.dot(dir);
    while (true) {
      x_new = project(res.x + step * dir);
      f_new = fg(x_new, g_new);
      const double decrease = std::min(0.0, res.grad.dot(x_new - res.x));
      if (std::isfinite(f_new) && f_new <= res.f + opt.armijo_c * decrease &&
          (x_new - res.x).cwiseAbs().maxCoeff() > 0.0) {
        accepted = true;
        break;
      }
      double next = step * opt.backtrack;
      if (std::isfinite(f_new) && dir_deriv < 0.0) {
        const double denom = 2.0 * (f_new - res.f - step * dir_deriv);
        if (denom > 0.0) {
          const double interp = -dir_deriv * step * step / denom;
          if (std::isfinite(interp)) {
            next = std::clamp(interp, 0.1 * step, 0.5 * step);
          }
        }
      }
      step = next;
      if (step < opt.min_step) {
        if (!retried_steepest && !s_hist.empty()) {
          // Quasi-Newton direction stalled; retry once as projected steepest
          // descent before giving up.
          retried_steepest = true;
          s_hist.clear();
          y_hist.clear();
          rho_hist.clear();
          gamma = 1.0;
          dir = -masked;
          step = 1.0 / std::max(1.0, dir.norm());
          continue;
        }
        break;
      }
    }
    if (!accepted) return res;  // stationary within line-search resolution

    const Vector s = x_new - res.x;
    const Vector y = g_new - res.grad;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      gamma = sy / y.squaredNorm();
      if (!std::isfinite(gamma) || gamma <= 0.0) gamma = 1.0;
    }

    res.x.swap(x_new);
    res.grad.swap(g_new);
    res.f = f_new;
  }

  res.proj_grad_norm = (res.x - project(res.x - res.grad)).cwiseAbs().maxCoeff();
  res.converged = res.proj_grad_norm <= opt.grad_tol;
  return res;
}

}  // namespace gnt
