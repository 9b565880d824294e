#pragma once

// Reference solver for the epsilon-SVR dual, written without any of the
// library's optimisation code: accelerated projected gradient on the doubled
// variables (alpha, alpha*) followed by an exact solve on the detected free set.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "demandcast/numerics.hpp"

namespace testing {

struct QpSolution {
  std::vector<double> alpha;
  std::vector<double> alpha_star;
  double objective = 0.0;  // dual objective, maximisation form
};

class SvrDualOracle {
 public:
  SvrDualOracle(const demandcast::Matrix& gram, std::vector<double> y, double c, double eps)
      : n_(y.size()), k_(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_)), y_(std::move(y)), c_(c), eps_(eps) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) k_(i, j) = gram(i, j);
  }

  // Maximisation-form dual objective at z = (alpha, alpha*).
  double objective(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd theta = z.head(n_) - z.tail(n_);
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y_.data(), n_);
    return -0.5 * theta.dot(k_ * theta) - eps_ * z.sum() + yv.dot(theta);
  }

  QpSolution solve(int iterations = 60000) const {
    const Eigen::Index m = static_cast<Eigen::Index>(2 * n_);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k_);
    const double lipschitz = 2.0 * std::max(es.eigenvalues().maxCoeff(), 1e-12);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m), prev = z, w = z;
    double t = 1.0;
    double best = objective(z);
    Eigen::VectorXd best_z = z;
    for (int it = 0; it < iterations; ++it) {
      const Eigen::VectorXd next = project(w + gradient(w) / lipschitz);
      const double value = objective(next);
      if (value < objective(z)) {
        // Function-value restart.
        t = 1.0;
        w = z;
        continue;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      w = next + ((t - 1.0) / t_next) * (next - z);
      prev = z;
      z = next;
      t = t_next;
      if (value > best) {
        best = value;
        best_z = z;
      }
      if ((z - prev).lpNorm<Eigen::Infinity>() < 1e-15) break;
    }
    polish(best_z, best);
    QpSolution out;
    out.alpha.assign(best_z.data(), best_z.data() + n_);
    out.alpha_star.assign(best_z.data() + n_, best_z.data() + 2 * n_);
    out.objective = best;
    return out;
  }

 private:
  // Gradient of the maximisation objective.
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd theta = z.head(n_) - z.tail(n_);
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y_.data(), n_);
    const Eigen::VectorXd g = yv - k_ * theta;
    Eigen::VectorXd out(2 * n_);
    out.head(n_) = g.array() - eps_;
    out.tail(n_) = -g.array() - eps_;
    return out;
  }

  // Euclidean projection onto {0 <= z <= C, sum(alpha) == sum(alpha*)}.
  Eigen::VectorXd project(const Eigen::VectorXd& v) const {
    auto at = [&](double lambda) {
      Eigen::VectorXd z(2 * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        z(i) = std::clamp(v(i) - lambda, 0.0, c_);
        z(n_ + i) = std::clamp(v(n_ + i) + lambda, 0.0, c_);
      }
      return z;
    };
    double lo = -(v.cwiseAbs().maxCoeff() + c_), hi = -lo;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      const Eigen::VectorXd z = at(mid);
      const double h = z.head(n_).sum() - z.tail(n_).sum();
      (h > 0.0 ? lo : hi) = mid;
    }
    return at(0.5 * (lo + hi));
  }

  // With the active set fixed, the optimum on the free variables solves a
  // linear KKT system; keep it when feasible and better.
  void polish(Eigen::VectorXd& z, double& best) const {
    const double tol = 1e-7 * c_;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (z(i) > tol && z(i) < c_ - tol) free.push_back(i);
    Eigen::VectorXd fixed = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) fixed(i) = z(i) <= tol ? 0.0 : (z(i) >= c_ - tol ? c_ : z(i));
    const Eigen::Index f = static_cast<Eigen::Index>(free.size());
    if (f == 0) {
      if (feasible(fixed) && objective(fixed) >= best) {
        best = objective(fixed);
        z = fixed;
      }
      return;
    }
    // Hessian of the minimisation form on the doubled variables.
    auto h = [&](Eigen::Index i, Eigen::Index j) {
      const double s = ((i < static_cast<Eigen::Index>(n_)) == (j < static_cast<Eigen::Index>(n_))) ? 1.0 : -1.0;
      return s * k_(i % n_, j % n_);
    };
    auto sign = [&](Eigen::Index i) { return i < static_cast<Eigen::Index>(n_) ? 1.0 : -1.0; };
    Eigen::VectorXd base = fixed;
    for (Eigen::Index i : free) base(i) = 0.0;
    const Eigen::VectorXd g0 = -gradient(base);  // minimisation gradient at base
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f + 1, f + 1);
    Eigen::VectorXd rhs(f + 1);
    for (Eigen::Index a = 0; a < f; ++a) {
      for (Eigen::Index b = 0; b < f; ++b) kkt(a, b) = h(free[a], free[b]);
      kkt(a, f) = kkt(f, a) = sign(free[a]);
      rhs(a) = -g0(free[a]);
    }
    double fixed_sum = 0.0;
    for (Eigen::Index i = 0; i < base.size(); ++i) fixed_sum += sign(i) * base(i);
    rhs(f) = -fixed_sum;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd cand = base;
    for (Eigen::Index a = 0; a < f; ++a) cand(free[a]) = sol(a);
    if (feasible(cand) && objective(cand) >= best) {
      best = objective(cand);
      z = cand;
    }
  }

  bool feasible(const Eigen::VectorXd& z) const {
    if (z.minCoeff() < -1e-12 || z.maxCoeff() > c_ + 1e-12) return false;
    return std::abs(z.head(n_).sum() - z.tail(n_).sum()) < 1e-10;
  }

  std::size_t n_;
  Eigen::MatrixXd k_;
  std::vector<double> y_;
  double c_;
  double eps_;
};

// Largest violation of the dual optimality conditions, in the
// maximal-violating-pair form: max over I_up of -a_t G_t minus min over I_low.
inline double kkt_gap(const demandcast::Matrix& gram, const std::vector<double>& y, double c,
                      double eps, const std::vector<double>& alpha,
                      const std::vector<double>& alpha_star) {
  const std::size_t n = y.size();
  const double bound_tol = 1e-12 * std::max(1.0, c);
  double up = -1e300, low = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    double k_theta = 0.0;
    for (std::size_t j = 0; j < n; ++j) k_theta += gram(i, j) * (alpha[j] - alpha_star[j]);
    // Minimisation gradients: alpha has a = +1, alpha* has a = -1.
    const double ga = k_theta + eps - y[i];
    const double gs = -k_theta + eps + y[i];
    if (alpha[i] < c - bound_tol) up = std::max(up, -ga);
    if (alpha[i] > bound_tol) low = std::min(low, -ga);
    if (alpha_star[i] > bound_tol) up = std::max(up, gs);
    if (alpha_star[i] < c - bound_tol) low = std::min(low, gs);
  }
  return up - low;
}

}  // namespace testing
