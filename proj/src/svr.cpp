#include "demandcast/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace demandcast {

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::anova: return "anova";
    case KernelFamily::bspline: return "bspline";
    case KernelFamily::erbf: return "erbf";
    case KernelFamily::linear: return "linear";
    case KernelFamily::poly: return "poly";
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::spline: return "spline";
  }
  return "?";
}

KernelFamily parse_kernel_family(std::string_view text) {
  for (auto f : {KernelFamily::anova, KernelFamily::bspline, KernelFamily::erbf,
                 KernelFamily::linear, KernelFamily::poly, KernelFamily::rbf,
                 KernelFamily::spline}) {
    if (text == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown kernel family '" + std::string(text) + "'");
}

Kernel Kernel::linear() { return {}; }

Kernel Kernel::poly(int degree) {
  Kernel k;
  k.family = KernelFamily::poly;
  k.degree = degree;
  return k;
}

Kernel Kernel::rbf(double sigma) {
  Kernel k;
  k.family = KernelFamily::rbf;
  k.sigma = sigma;
  return k;
}

Kernel Kernel::erbf(double sigma) {
  Kernel k;
  k.family = KernelFamily::erbf;
  k.sigma = sigma;
  return k;
}

Kernel Kernel::spline() {
  Kernel k;
  k.family = KernelFamily::spline;
  return k;
}

Kernel Kernel::bspline(int degree) {
  Kernel k;
  k.family = KernelFamily::bspline;
  k.degree = degree;
  return k;
}

Kernel Kernel::anova(int max_order) {
  Kernel k;
  k.family = KernelFamily::anova;
  k.max_order = max_order;
  return k;
}

void Kernel::validate() const {
  const bool wants_degree = family == KernelFamily::poly || family == KernelFamily::bspline;
  const bool wants_sigma = family == KernelFamily::rbf || family == KernelFamily::erbf;
  const bool wants_order = family == KernelFamily::anova;
  const bool allows_affine = family == KernelFamily::poly;
  const std::string name(to_string(family));

  if (wants_degree != degree.has_value()) {
    throw std::invalid_argument(name + " kernel: degree " +
                                (wants_degree ? "required" : "not applicable"));
  }
  if (wants_sigma != sigma.has_value()) {
    throw std::invalid_argument(name + " kernel: sigma " +
                                (wants_sigma ? "required" : "not applicable"));
  }
  if (wants_order != max_order.has_value()) {
    throw std::invalid_argument(name + " kernel: max_order " +
                                (wants_order ? "required" : "not applicable"));
  }
  if (!allows_affine && (scale || offset)) {
    throw std::invalid_argument(name + " kernel: scale/offset not applicable");
  }
  if (family == KernelFamily::poly && *degree < 1) {
    throw std::invalid_argument("poly kernel: degree must be >= 1");
  }
  if (family == KernelFamily::bspline && *degree < 0) {
    throw std::invalid_argument("bspline kernel: degree must be >= 0");
  }
  if (wants_sigma && !(*sigma > 0.0)) throw std::invalid_argument(name + " kernel: sigma must be > 0");
  if (wants_order && *max_order < 0) throw std::invalid_argument("anova kernel: max_order must be >= 0");
}

std::string Kernel::label() const {
  std::ostringstream out;
  switch (family) {
    case KernelFamily::anova: out << "Anova-" << *max_order; break;
    case KernelFamily::bspline: out << "BSpline-" << *degree; break;
    case KernelFamily::erbf: out << "ERBF-" << *sigma; break;
    case KernelFamily::linear: out << "Linear"; break;
    case KernelFamily::poly: out << "Poly-" << *degree; break;
    case KernelFamily::rbf: out << "RBF-" << *sigma; break;
    case KernelFamily::spline: out << "Spline"; break;
  }
  return out.str();
}

double cardinal_bspline(int n, double x) {
  if (n < 0) throw std::invalid_argument("cardinal_bspline: negative degree");
  const double half = 0.5 * static_cast<double>(n + 1);
  if (std::abs(x) >= half) return n == 0 && std::abs(x) == half ? 0.5 : 0.0;
  if (n == 0) return 1.0;
  double sum = 0.0;
  double binom = 1.0;
  double factorial = 1.0;
  for (int k = 1; k <= n; ++k) factorial *= k;
  for (int k = 0; k <= n + 1; ++k) {
    const double shifted = x + half - static_cast<double>(k);
    if (shifted > 0.0) sum += (k % 2 == 0 ? 1.0 : -1.0) * binom * std::pow(shifted, n);
    binom = binom * static_cast<double>(n + 1 - k) / static_cast<double>(k + 1);
  }
  return sum / factorial;
}

namespace {

double eval_unchecked(const Kernel& k, std::span<const double> x, std::span<const double> y) {
  const std::size_t d = x.size();
  switch (k.family) {
    case KernelFamily::linear:
      return dot(x, y);
    case KernelFamily::poly:
      return std::pow(k.scale.value_or(1.0) * dot(x, y) + k.offset.value_or(1.0), *k.degree);
    case KernelFamily::rbf:
    case KernelFamily::erbf: {
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) sq += (x[i] - y[i]) * (x[i] - y[i]);
      const double two_s2 = 2.0 * *k.sigma * *k.sigma;
      return k.family == KernelFamily::rbf ? std::exp(-sq / two_s2) : std::exp(-std::sqrt(sq) / two_s2);
    }
    case KernelFamily::spline: {
      double prod = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double xy = x[i] * y[i];
        const double m = std::min(x[i], y[i]);
        prod *= 1.0 + xy + xy * m - 0.5 * (x[i] + y[i]) * m * m + m * m * m / 3.0;
      }
      return prod;
    }
    case KernelFamily::bspline: {
      const int order = 2 * *k.degree + 1;
      double prod = 1.0;
      for (std::size_t i = 0; i < d; ++i) prod *= cardinal_bspline(order, x[i] - y[i]);
      return prod;
    }
    case KernelFamily::anova: {
      const std::size_t order =
          std::min<std::size_t>(d, static_cast<std::size_t>(std::max(1, *k.max_order)));
      // Elementary symmetric polynomials e_1..e_order of z_i = exp(-(x_i - y_i)^2).
      std::vector<double> e(order + 1, 0.0);
      e[0] = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double z = std::exp(-(x[i] - y[i]) * (x[i] - y[i]));
        for (std::size_t j = order; j >= 1; --j) e[j] += e[j - 1] * z;
      }
      double sum = 0.0;
      for (std::size_t j = 1; j <= order; ++j) sum += e[j];
      return sum;
    }
  }
  return 0.0;
}

std::string describe(std::span<const double> v) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ')';
  return out.str();
}

}  // namespace

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("kernel_eval: dimensions " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  }
  const double value = eval_unchecked(k, x, y);
  if (!std::isfinite(value)) {
    throw std::domain_error("kernel " + k.label() + " is non-finite at x=" + describe(x) +
                            ", y=" + describe(y));
  }
  return value;
}

Matrix gram_matrix(const Kernel& k, const Matrix& points) {
  const std::size_t n = points.rows();
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = kernel_eval(k, points.row(i), points.row(j));
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

void SvrConfig::validate() const {
  kernel.validate();
  if (!(c > 0.0)) throw std::invalid_argument("SvrConfig: C must be > 0");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("SvrConfig: epsilon must be >= 0");
  if (!(kkt_tol > 0.0)) throw std::invalid_argument("SvrConfig: kkt_tol must be > 0");
  if (max_passes < 1) throw std::invalid_argument("SvrConfig: max_passes must be >= 1");
}

// The dual is solved in the doubled form over beta = (alpha, alpha*) with
// labels s = (+1, -1): minimise 1/2 beta^T Q beta + p^T beta subject to
// s^T beta = 0 and 0 <= beta <= C, where Q_tu = s_t s_u K and
// p = (eps - y, eps + y). Working pairs are chosen by maximal violation for
// the first index and second-order gain for the second.
SvrDualSolution svr_solve_dual(const Matrix& gram, std::span<const double> targets, double c,
                               double epsilon, double kkt_tol, std::size_t max_iterations) {
  const std::size_t n = targets.size();
  if (gram.rows() != n || gram.cols() != n) {
    throw ShapeError("svr: gram " + gram.shape() + " for " + std::to_string(n) + " targets");
  }
  const std::size_t l = 2 * n;
  constexpr double kTau = 1e-12;
  auto sign = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
  auto base = [n](std::size_t t) { return t < n ? t : t - n; };
  auto q = [&](std::size_t t, std::size_t u) { return sign(t) * sign(u) * gram(base(t), base(u)); };

  std::vector<double> beta(l, 0.0);
  std::vector<double> grad(l);
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = epsilon - targets[i];
    grad[i + n] = epsilon + targets[i];
  }
  auto in_up = [&](std::size_t t) { return sign(t) > 0 ? beta[t] < c : beta[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return sign(t) > 0 ? beta[t] > 0.0 : beta[t] < c; };

  SvrDualSolution sol;
  std::size_t iter = 0;
  while (true) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t i_sel = l;
    for (std::size_t t = 0; t < l; ++t) {
      if (in_up(t) && -sign(t) * grad[t] >= gmax) {
        gmax = -sign(t) * grad[t];
        i_sel = t;
      }
    }
    std::size_t j_sel = l;
    double best_gain = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < l; ++t) {
      if (!in_low(t)) continue;
      gmax2 = std::max(gmax2, sign(t) * grad[t]);
      if (i_sel == l) continue;
      const double diff = gmax + sign(t) * grad[t];
      if (diff <= 0.0) continue;
      double curvature = q(i_sel, i_sel) + q(t, t) - 2.0 * sign(i_sel) * sign(t) * q(i_sel, t);
      if (curvature <= 0.0) curvature = kTau;
      const double gain = -(diff * diff) / curvature;
      if (gain <= best_gain) {
        best_gain = gain;
        j_sel = t;
      }
    }
    sol.kkt_violation = std::max(0.0, gmax + gmax2);
    if (i_sel == l || j_sel == l || gmax + gmax2 < kkt_tol) {
      sol.converged = true;
      break;
    }
    if (iter >= max_iterations) break;
    ++iter;

    const std::size_t i = i_sel;
    const std::size_t j = j_sel;
    const double old_i = beta[i];
    const double old_j = beta[j];
    double curvature = q(i, i) + q(j, j) - 2.0 * sign(i) * sign(j) * q(i, j);
    if (curvature <= 0.0) curvature = kTau;

    if (sign(i) != sign(j)) {
      const double delta = (-grad[i] - grad[j]) / curvature;
      const double diff = beta[i] - beta[j];
      beta[i] += delta;
      beta[j] += delta;
      if (diff > 0.0) {
        if (beta[j] < 0.0) { beta[j] = 0.0; beta[i] = diff; }
      } else {
        if (beta[i] < 0.0) { beta[i] = 0.0; beta[j] = -diff; }
      }
      if (diff > 0.0) {
        if (beta[i] > c) { beta[i] = c; beta[j] = c - diff; }
      } else {
        if (beta[j] > c) { beta[j] = c; beta[i] = c + diff; }
      }
    } else {
      const double delta = (grad[i] - grad[j]) / curvature;
      const double sum = beta[i] + beta[j];
      beta[i] -= delta;
      beta[j] += delta;
      if (sum > c) {
        if (beta[i] > c) { beta[i] = c; beta[j] = sum - c; }
      } else {
        if (beta[j] < 0.0) { beta[j] = 0.0; beta[i] = sum; }
      }
      if (sum > c) {
        if (beta[j] > c) { beta[j] = c; beta[i] = sum - c; }
      } else {
        if (beta[i] < 0.0) { beta[i] = 0.0; beta[j] = sum; }
      }
    }

    const double di = beta[i] - old_i;
    const double dj = beta[j] - old_j;
    for (std::size_t t = 0; t < l; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
  }
  sol.iterations = iter;

  // Threshold: average over free variables, else midpoint of the feasible interval.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < l; ++t) {
    const double yg = sign(t) * grad[t];
    if (beta[t] >= c) {
      if (sign(t) < 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else if (beta[t] <= 0.0) {
      if (sign(t) > 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                    : 0.5 * (upper + lower);
  sol.b = -rho;
  sol.alpha.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(n));
  sol.alpha_star.assign(beta.begin() + static_cast<std::ptrdiff_t>(n), beta.end());
  return sol;
}

double svr_dual_objective(const Matrix& gram, std::span<const double> targets, double epsilon,
                          std::span<const double> alpha, std::span<const double> alpha_star) {
  const std::size_t n = targets.size();
  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = alpha[i] - alpha_star[i];
  double quad = 0.0;
  double linear = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    quad += theta[i] * dot(gram.row(i), theta);
    linear += -epsilon * (alpha[i] + alpha_star[i]) + targets[i] * theta[i];
  }
  return -0.5 * quad + linear;
}

SvrModel svr_train(const SvrConfig& config, const PatternSet& patterns) {
  config.validate();
  const std::size_t n = patterns.size();
  if (n == 0) throw std::invalid_argument("svr_train: no patterns");
  if (patterns.targets.cols() != 1) throw ShapeError("svr_train: targets must be a single column");

  const Matrix gram = gram_matrix(config.kernel, patterns.inputs);
  const auto targets = patterns.targets.entries();
  const SvrDualSolution sol =
      svr_solve_dual(gram, targets, config.c, config.epsilon, config.kkt_tol, config.max_passes * n);

  SvrModel model;
  model.config = config;
  model.b = sol.b;
  model.converged = sol.converged;
  model.kkt_violation = sol.kkt_violation;
  model.iterations = sol.iterations;

  std::vector<double> sv_entries;
  for (std::size_t i = 0; i < n; ++i) {
    const double coef = sol.alpha[i] - sol.alpha_star[i];
    if (coef == 0.0) continue;
    model.dual_coefficients.push_back(coef);
    const auto row = patterns.inputs.row(i);
    sv_entries.insert(sv_entries.end(), row.begin(), row.end());
  }
  model.support_vectors =
      Matrix(model.dual_coefficients.size(), patterns.input_count(), std::move(sv_entries));

  // Training fit from the Gram matrix already in hand.
  std::vector<double> fitted(n, sol.b);
  for (std::size_t i = 0; i < n; ++i) {
    const double coef = sol.alpha[i] - sol.alpha_star[i];
    if (coef == 0.0) continue;
    for (std::size_t r = 0; r < n; ++r) fitted[r] += coef * gram(i, r);
  }
  const auto predicted = patterns.to_demand(fitted);
  const auto actual = patterns.actual_demands();
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (actual[i] == 0.0) continue;
    sum += 100.0 * std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
    ++counted;
  }
  model.training_error = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
  return model;
}

Matrix svr_predict(const SvrModel& model, const Matrix& inputs) {
  if (model.support_vector_count() > 0 && inputs.cols() != model.support_vectors.cols()) {
    throw ShapeError("svr_predict: model trained on " +
                     std::to_string(model.support_vectors.cols()) + " inputs, got " +
                     inputs.shape());
  }
  Matrix out(inputs.rows(), 1, model.b);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    double f = model.b;
    for (std::size_t s = 0; s < model.support_vector_count(); ++s) {
      f += model.dual_coefficients[s] *
           kernel_eval(model.config.kernel, model.support_vectors.row(s), inputs.row(r));
    }
    out(r, 0) = f;
  }
  return out;
}

std::vector<SvrConfig> default_kernel_sweep() {
  std::vector<Kernel> kernels;
  for (int order = 0; order <= 3; ++order) kernels.push_back(Kernel::anova(order));
  for (int degree = 0; degree <= 1; ++degree) kernels.push_back(Kernel::bspline(degree));
  for (double sigma : {1.0, 2.0, 3.0}) kernels.push_back(Kernel::erbf(sigma));
  kernels.push_back(Kernel::linear());
  for (int degree = 1; degree <= 3; ++degree) kernels.push_back(Kernel::poly(degree));
  for (double sigma : {5.0, 6.0, 7.0}) kernels.push_back(Kernel::rbf(sigma));
  kernels.push_back(Kernel::spline());

  std::vector<SvrConfig> sweep;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    SvrConfig config;
    config.kernel = kernels[i];
    config.seed = i + 1;
    sweep.push_back(config);
  }
  return sweep;
}

}  // namespace demandcast
