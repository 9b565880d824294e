#include "demandcast/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "demandcast/numerics.hpp"

namespace demandcast {

namespace {

double checked(double f, std::size_t iteration) {
  if (!std::isfinite(f)) {
    throw DivergenceError("objective became non-finite at iteration " + std::to_string(iteration),
                          iteration);
  }
  return f;
}

void axpy(double a, std::span<const double> x, std::span<const double> y, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] + a * x[i];
}

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  bool accepted = false;
};

// Armijo backtracking from `step`. On success x_out/grad_out hold the new point.
LineSearchResult backtrack(const ObjectiveFn& fn, std::span<const double> x, double f0,
                           std::span<const double> grad0, std::span<const double> dir,
                           double step, std::vector<double>& x_out,
                           std::vector<double>& grad_out) {
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr int kMaxTrials = 60;
  const double slope = dot(grad0, dir);
  for (int trial = 0; trial < kMaxTrials; ++trial) {
    axpy(step, dir, x, x_out);
    const double f = fn(x_out, grad_out);
    if (std::isfinite(f) && f <= f0 + kArmijo * step * slope) return {step, f, true};
    step *= kShrink;
  }
  return {};
}

// Minimiser of the cubic through (a, fa, da) and (b, fb, db), or the midpoint
// when the cubic is degenerate. Always inside the central 80% of [a, b].
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b), margin = 0.1 * (hi - lo);
  double t = 0.5 * (a + b);
  if (std::isfinite(fb)) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b - a);
      const double denom = db - da + 2.0 * d2;
      if (denom != 0.0) t = b - (b - a) * (db + d2 - d1) / denom;
    }
  }
  if (!std::isfinite(t)) t = 0.5 * (a + b);
  return std::clamp(t, lo + margin, hi - margin);
}

// Line search for the strong Wolfe conditions: sufficient decrease (Armijo)
// and |slope| <= curvature * |initial slope|. Falls back to the best
// sufficient-decrease point seen when the bracket collapses.
LineSearchResult wolfe(const ObjectiveFn& fn, std::span<const double> x, double f0,
                       std::span<const double> grad0, std::span<const double> dir, double step,
                       double curvature, std::vector<double>& x_out,
                       std::vector<double>& grad_out) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxEvals = 40;
  const double slope0 = dot(grad0, dir);
  int evals = 0;
  double best_step = 0.0, best_value = f0;

  auto eval = [&](double a, double& f, double& d) {
    ++evals;
    axpy(a, dir, x, x_out);
    f = fn(x_out, grad_out);
    d = std::isfinite(f) ? dot(grad_out, dir) : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(f) && f <= f0 + kArmijo * a * slope0 && f < best_value) {
      best_step = a;
      best_value = f;
    }
  };
  auto fallback = [&]() -> LineSearchResult {
    if (best_step == 0.0) return {};
    double f, d;
    eval(best_step, f, d);
    return {best_step, f, true};
  };
  auto zoom = [&](double lo, double f_lo, double d_lo, double hi, double f_hi,
                  double d_hi) -> LineSearchResult {
    while (evals < kMaxEvals) {
      if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
      const double a = cubic_step(lo, f_lo, d_lo, hi, f_hi, d_hi);
      double f, d;
      eval(a, f, d);
      if (!std::isfinite(f) || f > f0 + kArmijo * a * slope0 || f >= f_lo) {
        hi = a;
        f_hi = f;
        d_hi = d;
        continue;
      }
      if (std::abs(d) <= -curvature * slope0) return {a, f, true};
      if (d * (hi - lo) >= 0.0) {
        hi = lo;
        f_hi = f_lo;
        d_hi = d_lo;
      }
      lo = a;
      f_lo = f;
      d_lo = d;
    }
    return fallback();
  };

  double prev = 0.0, f_prev = f0, d_prev = slope0;
  double a = step;
  for (int i = 0; evals < kMaxEvals; ++i) {
    double f, d;
    eval(a, f, d);
    if (!std::isfinite(f) || f > f0 + kArmijo * a * slope0 || (i > 0 && f >= f_prev)) {
      return zoom(prev, f_prev, d_prev, a, f, d);
    }
    if (std::abs(d) <= -curvature * slope0) return {a, f, true};
    if (d >= 0.0) return zoom(a, f, d, prev, f_prev, d_prev);
    prev = a;
    f_prev = f;
    d_prev = d;
    a *= 2.0;
  }
  return fallback();
}

}  // namespace

MinimizeResult minimize_scg(std::vector<double> x0, const ObjectiveFn& fn,
                            const MinimizeOptions& options) {
  constexpr double kSigma0 = 1e-4;
  constexpr double kLambdaMin = 1e-15;
  constexpr double kLambdaMax = 1e100;
  const std::size_t n = x0.size();

  MinimizeResult result;
  std::vector<double> x = std::move(x0);
  std::vector<double> grad_new(n), grad_old(n), grad_plus(n), scratch(n), x_trial(n), dir(n);

  double f_old = checked(fn(x, grad_new), 0);
  double f_now = f_old;
  grad_old = grad_new;
  for (std::size_t i = 0; i < n; ++i) dir[i] = -grad_new[i];

  bool success = true;
  std::size_t n_success = 0;
  double lambda = 1.0;
  double mu = 0.0, kappa = 0.0, theta = 0.0;

  if (norm2(grad_new) < options.grad_tol) {
    result.converged = true;
  }
  std::size_t iter = 0;
  while (!result.converged && iter < options.max_iters) {
    ++iter;
    if (success) {
      mu = dot(dir, grad_new);
      if (mu >= 0.0) {
        for (std::size_t i = 0; i < n; ++i) dir[i] = -grad_new[i];
        mu = dot(dir, grad_new);
      }
      kappa = dot(dir, dir);
      if (kappa < std::numeric_limits<double>::epsilon()) {
        // A vanishing conjugate direction: restart along steepest descent.
        for (std::size_t i = 0; i < n; ++i) dir[i] = -grad_new[i];
        mu = dot(dir, grad_new);
        kappa = dot(dir, dir);
        n_success = 0;
      }
      if (kappa < std::numeric_limits<double>::epsilon() * std::numeric_limits<double>::epsilon()) {
        result.converged = true;
        result.history.push_back(f_now);
        break;
      }
      const double sigma = kSigma0 / std::sqrt(kappa);
      axpy(sigma, dir, x, x_trial);
      checked(fn(x_trial, grad_plus), iter);
      for (std::size_t i = 0; i < n; ++i) scratch[i] = grad_plus[i] - grad_new[i];
      theta = dot(dir, scratch) / sigma;
    }

    double delta = theta + lambda * kappa;
    if (delta <= 0.0) {
      delta = lambda * kappa;
      lambda -= theta / kappa;
    }
    const double alpha = -mu / delta;
    axpy(alpha, dir, x, x_trial);
    const double f_new = checked(fn(x_trial, scratch), iter);
    const double comparison = 2.0 * (f_new - f_old) / (alpha * mu);

    if (comparison >= 0.0 && f_new <= f_old) {
      success = true;
      ++n_success;
      x = x_trial;
      f_now = f_new;
    } else {
      success = false;
      f_now = f_old;
    }
    result.history.push_back(f_now);

    if (success) {
      f_old = f_new;
      grad_old = grad_new;
      grad_new = scratch;
      if (norm2(grad_new) < options.grad_tol) {
        result.converged = true;
        break;
      }
    }

    if (comparison < 0.25) lambda = std::min(4.0 * lambda, kLambdaMax);
    if (comparison > 0.75) lambda = std::max(0.5 * lambda, kLambdaMin);
    if (lambda >= kLambdaMax) break;  // no further progress possible

    if (n_success == n) {
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad_new[i];
      n_success = 0;
    } else if (success) {
      double num = 0.0;
      for (std::size_t i = 0; i < n; ++i) num += (grad_old[i] - grad_new[i]) * grad_new[i];
      const double gamma = num / mu;
      for (std::size_t i = 0; i < n; ++i) dir[i] = gamma * dir[i] - grad_new[i];
    }
  }

  result.x = std::move(x);
  result.value = f_now;
  result.iterations = iter;
  return result;
}

MinimizeResult minimize_conjgrad(std::vector<double> x0, const ObjectiveFn& fn,
                                 const MinimizeOptions& options) {
  const std::size_t n = x0.size();
  MinimizeResult result;
  std::vector<double> x = std::move(x0);
  std::vector<double> grad(n), grad_next(n), x_next(n), dir(n);

  double f = checked(fn(x, grad), 0);
  for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
  double step = 1.0 / std::max(1.0, norm2(grad));

  std::size_t iter = 0;
  std::size_t since_restart = 0;
  result.converged = norm2(grad) < options.grad_tol;
  while (!result.converged && iter < options.max_iters) {
    ++iter;
    double slope = dot(grad, dir);
    if (slope >= 0.0) {
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = dot(grad, dir);
      since_restart = 0;
    }
    auto ls = wolfe(fn, x, f, grad, dir, step, 0.1, x_next, grad_next);
    if (!ls.accepted && since_restart != 0) {
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = dot(grad, dir);
      since_restart = 0;
      ls = backtrack(fn, x, f, grad, dir, 1.0 / std::max(1.0, norm2(grad)), x_next, grad_next);
    }
    if (!ls.accepted) {
      result.history.push_back(f);
      break;  // stalled at numerical precision
    }

    // Polak-Ribiere, clipped at zero, with periodic restart.
    double num = 0.0;
    const double den = dot(grad, grad);
    for (std::size_t i = 0; i < n; ++i) num += grad_next[i] * (grad_next[i] - grad[i]);
    double beta = den > 0.0 ? std::max(0.0, num / den) : 0.0;
    if (++since_restart >= n) {
      beta = 0.0;
      since_restart = 0;
    }
    const double prev_slope = slope;
    x.swap(x_next);
    grad.swap(grad_next);
    f = ls.value;
    result.history.push_back(f);
    if (norm2(grad) < options.grad_tol) {
      result.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) dir[i] = beta * dir[i] - grad[i];
    // Next trial step keeps the expected first-order decrease constant.
    const double new_slope = dot(grad, dir);
    step = new_slope < 0.0 ? std::min(1e6, 2.0 * ls.step * prev_slope / new_slope) : 1.0;
  }

  result.x = std::move(x);
  result.value = f;
  result.iterations = iter;
  return result;
}

MinimizeResult minimize_bfgs(std::vector<double> x0, const ObjectiveFn& fn,
                             const MinimizeOptions& options) {
  const std::size_t n = x0.size();
  MinimizeResult result;
  std::vector<double> x = std::move(x0);
  std::vector<double> grad(n), grad_next(n), x_next(n), dir(n), s(n), y(n), hy(n);
  // Inverse Hessian approximation, row-major n x n.
  std::vector<double> h(n * n, 0.0);
  auto reset_h = [&](double scale) {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
  };

  double f = checked(fn(x, grad), 0);
  reset_h(1.0 / std::max(1.0, norm2(grad)));
  bool first_update = true;

  std::size_t iter = 0;
  result.converged = norm2(grad) < options.grad_tol;
  while (!result.converged && iter < options.max_iters) {
    ++iter;
    for (std::size_t i = 0; i < n; ++i) dir[i] = -dot({h.data() + i * n, n}, grad);
    if (dot(grad, dir) >= 0.0) {
      reset_h(1.0 / std::max(1.0, norm2(grad)));
      first_update = true;
      for (std::size_t i = 0; i < n; ++i) dir[i] = -h[i * n + i] * grad[i];
    }
    auto ls = wolfe(fn, x, f, grad, dir, 1.0, 0.9, x_next, grad_next);
    if (!ls.accepted && !first_update) {
      reset_h(1.0 / std::max(1.0, norm2(grad)));
      first_update = true;
      for (std::size_t i = 0; i < n; ++i) dir[i] = -h[i * n + i] * grad[i];
      ls = backtrack(fn, x, f, grad, dir, 1.0, x_next, grad_next);
    }
    if (!ls.accepted) {
      result.history.push_back(f);
      break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_next[i] - x[i];
      y[i] = grad_next[i] - grad[i];
    }
    x.swap(x_next);
    grad.swap(grad_next);
    f = ls.value;
    result.history.push_back(f);
    if (norm2(grad) < options.grad_tol) {
      result.converged = true;
      break;
    }

    const double sy = dot(s, y);
    if (sy <= 1e-12 * norm2(s) * norm2(y)) continue;  // curvature condition failed
    if (first_update) {
      reset_h(sy / dot(y, y));
      first_update = false;
    }
    for (std::size_t i = 0; i < n; ++i) hy[i] = dot({h.data() + i * n, n}, y);
    const double yhy = dot(y, hy);
    const double rho = 1.0 / sy;
    const double coeff = (1.0 + rho * yhy) * rho;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        h[i * n + j] += coeff * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
      }
    }
  }

  result.x = std::move(x);
  result.value = f;
  result.iterations = iter;
  return result;
}

}  // namespace demandcast
