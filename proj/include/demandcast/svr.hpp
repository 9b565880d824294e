#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demandcast/dataio.hpp"
#include "demandcast/numerics.hpp"

namespace demandcast {

enum class KernelFamily { anova, bspline, erbf, linear, poly, rbf, spline };

std::string_view to_string(KernelFamily f);
KernelFamily parse_kernel_family(std::string_view text);

/// Kernel family plus the hyperparameters that apply to it. Inapplicable
/// parameters stay empty.
///
///   linear   x.y
///   poly     (scale * x.y + offset)^degree      scale, offset default to 1
///   rbf      exp(-|x-y|^2 / (2 sigma^2))
///   erbf     exp(-|x-y| / (2 sigma^2))
///   spline   prod_i (1 + x_i y_i + x_i y_i m_i - (x_i + y_i)/2 m_i^2 + m_i^3/3),  m_i = min(x_i, y_i)
///   bspline  prod_i B_{2 degree + 1}(x_i - y_i), centred cardinal B-spline
///   anova    sum over index subsets S, 1 <= |S| <= max(1, max_order), of prod_{i in S} exp(-(x_i - y_i)^2)
struct Kernel {
  KernelFamily family = KernelFamily::linear;
  std::optional<int> degree;
  std::optional<double> scale;
  std::optional<double> offset;
  std::optional<double> sigma;
  std::optional<int> max_order;

  static Kernel linear();
  static Kernel poly(int degree);
  static Kernel rbf(double sigma);
  static Kernel erbf(double sigma);
  static Kernel spline();
  static Kernel bspline(int degree);
  static Kernel anova(int max_order);

  void validate() const;
  /// Short unique label, e.g. "Linear", "Poly-2", "RBF-5".
  std::string label() const;
  friend bool operator==(const Kernel&, const Kernel&) = default;
};

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y);

/// Centred cardinal B-spline of order n + 1 (degree n), support [-(n+1)/2, (n+1)/2].
double cardinal_bspline(int n, double x);

Matrix gram_matrix(const Kernel& k, const Matrix& points);

struct SvrConfig {
  Kernel kernel;
  double c = 10.0;
  double epsilon = 0.01;
  double kkt_tol = 1e-3;
  /// Iteration cap is max_passes * n pairwise updates.
  std::size_t max_passes = 10000;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Solution of the epsilon-SVR dual over alpha, alpha* in [0, C]^n.
struct SvrDualSolution {
  std::vector<double> alpha;
  std::vector<double> alpha_star;
  double b = 0.0;
  bool converged = false;
  /// Maximal violating-pair gap m(a) - M(a) at exit.
  double kkt_violation = 0.0;
  std::size_t iterations = 0;
};

/// SMO with second-order working-set selection on a precomputed Gram matrix.
SvrDualSolution svr_solve_dual(const Matrix& gram, std::span<const double> targets, double c,
                               double epsilon, double kkt_tol, std::size_t max_iterations);

/// Dual objective -1/2 th^T K th - eps sum(a + a*) + y^T th with th = a - a*.
double svr_dual_objective(const Matrix& gram, std::span<const double> targets, double epsilon,
                          std::span<const double> alpha, std::span<const double> alpha_star);

struct SvrModel {
  Matrix support_vectors;
  /// alpha_i - alpha*_i for each support vector.
  std::vector<double> dual_coefficients;
  double b = 0.0;
  SvrConfig config;
  /// MAPE (%) on the training targets in original units (zero targets skipped).
  double training_error = 0.0;
  bool converged = true;
  double kkt_violation = 0.0;
  std::size_t iterations = 0;

  std::size_t support_vector_count() const noexcept { return dual_coefficients.size(); }
};

SvrModel svr_train(const SvrConfig& config, const PatternSet& patterns);

/// f(x) = sum_i coef_i K(sv_i, x) + b, as an n x 1 matrix.
Matrix svr_predict(const SvrModel& model, const Matrix& inputs);

/// The seventeen kernels of the reference sweep, in table order.
std::vector<SvrConfig> default_kernel_sweep();

}  // namespace demandcast
