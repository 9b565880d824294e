#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace demandcast {

/// Objective became non-finite during minimization.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Returns f(x) and writes the gradient into `grad` (same length as x).
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MinimizeOptions {
  std::size_t max_iters = 500;
  double grad_tol = 1e-6;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Objective at x after every iteration; non-increasing for all three methods.
  std::vector<double> history;
};

/// Moller's scaled conjugate gradient.
MinimizeResult minimize_scg(std::vector<double> x0, const ObjectiveFn& fn,
                            const MinimizeOptions& options);

/// Nonlinear conjugate gradient, Polak-Ribiere (clipped at zero) directions,
/// backtracking Armijo line search, restart every n iterations.
MinimizeResult minimize_conjgrad(std::vector<double> x0, const ObjectiveFn& fn,
                                 const MinimizeOptions& options);

/// BFGS on the inverse Hessian with the same backtracking line search.
MinimizeResult minimize_bfgs(std::vector<double> x0, const ObjectiveFn& fn,
                             const MinimizeOptions& options);

}  // namespace demandcast
