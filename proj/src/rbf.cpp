#include "demandcast/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace demandcast {

std::string_view to_string(RbfActivation a) {
  switch (a) {
    case RbfActivation::gaussian: return "gaussian";
    case RbfActivation::tps: return "tps";
    case RbfActivation::r4logr: return "r4logr";
  }
  return "?";
}

RbfActivation parse_rbf_activation(std::string_view text) {
  for (auto a : {RbfActivation::gaussian, RbfActivation::tps, RbfActivation::r4logr}) {
    if (text == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown RBF activation '" + std::string(text) + "'");
}

void RbfConfig::validate() const {
  if (n_inputs < 1) throw std::invalid_argument("RbfConfig: n_inputs must be >= 1");
  if (n_hidden < 1) throw std::invalid_argument("RbfConfig: n_hidden must be >= 1");
  if (em_iters < 1) throw std::invalid_argument("RbfConfig: em_iters must be >= 1");
}

double rbf_basis(RbfActivation activation, double r, double width) {
  switch (activation) {
    case RbfActivation::gaussian:
      return std::exp(-(r * r) / (2.0 * width * width));
    case RbfActivation::tps:
      return r > 0.0 ? r * r * std::log(r) : 0.0;
    case RbfActivation::r4logr:
      return r > 0.0 ? r * r * r * r * std::log(r) : 0.0;
  }
  return 0.0;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double log_sum_exp(std::span<const double> v) {
  const double peak = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(peak)) return peak;
  double s = 0.0;
  for (double x : v) s += std::exp(x - peak);
  return peak + std::log(s);
}

// Spherical Gaussian mixture state.
struct Mixture {
  Matrix means;                 // M x d
  std::vector<double> variances;  // per component, per dimension
  std::vector<double> priors;
};

// Fills log(prior_j * N(x_n | mean_j, var_j I)) into `log_joint` (n x M) and
// returns the total log-likelihood.
double expectation(const Mixture& mix, const Matrix& x, Matrix& log_joint) {
  const std::size_t n = x.rows();
  const std::size_t m = mix.means.rows();
  const double d = static_cast<double>(x.cols());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    auto row = log_joint.row(r);
    for (std::size_t j = 0; j < m; ++j) {
      const double var = mix.variances[j];
      row[j] = std::log(mix.priors[j]) - 0.5 * d * (log_two_pi + std::log(var)) -
               0.5 * squared_distance(x.row(r), mix.means.row(j)) / var;
    }
    const double lse = log_sum_exp(row);
    total += lse;
    for (double& v : row) v = std::exp(v - lse);  // responsibilities
  }
  return total;
}

}  // namespace

CentreLayout rbf_place_centres_em(const PatternSet& patterns, const RbfConfig& config,
                                  EmTrace* trace) {
  config.validate();
  const Matrix& x = patterns.inputs;
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t m = config.n_hidden;
  if (d != config.n_inputs) {
    throw ShapeError("rbf: config expects " + std::to_string(config.n_inputs) +
                     " inputs, patterns have " + std::to_string(d));
  }
  if (m > n) {
    throw std::invalid_argument("rbf: " + std::to_string(m) + " centres exceed " +
                                std::to_string(n) + " patterns");
  }

  const double var_floor = kMinGaussianWidth * kMinGaussianWidth;
  Rng rng(config.seed);

  // Pooled per-dimension variance of the data, used when a component needs a
  // fallback spread.
  double data_var = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) data_var += (x(r, c) - mean) * (x(r, c) - mean);
  }
  data_var = std::max(var_floor, data_var / static_cast<double>(n * d));

  Mixture mix{Matrix(m, d), std::vector<double>(m), std::vector<double>(m, 1.0 / static_cast<double>(m))};
  const auto seeds = rng.sample_distinct(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    std::copy_n(x.row(seeds[j]).begin(), d, mix.means.row(j).begin());
  }
  // Initial spread: squared distance to the nearest other centre, per dimension.
  for (std::size_t j = 0; j < m; ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      if (k == j) continue;
      const double dist = squared_distance(mix.means.row(j), mix.means.row(k));
      if (dist > 0.0) nearest = std::min(nearest, dist);
    }
    mix.variances[j] = std::isfinite(nearest) ? std::max(var_floor, nearest / static_cast<double>(d))
                                              : data_var;
  }

  EmTrace local;
  EmTrace& log = trace ? *trace : local;
  log.log_likelihood.clear();
  log.reinitialised = 0;

  Matrix resp(n, m);
  for (std::size_t iter = 0; iter < config.em_iters; ++iter) {
    log.log_likelihood.push_back(expectation(mix, x, resp));

    for (std::size_t j = 0; j < m; ++j) {
      double mass = 0.0;
      for (std::size_t r = 0; r < n; ++r) mass += resp(r, j);
      auto mean = mix.means.row(j);
      if (mass < 1e-10) {
        const std::size_t pick = rng.index(n);
        std::copy_n(x.row(pick).begin(), d, mean.begin());
        mix.variances[j] = data_var;
        mix.priors[j] = 1.0 / static_cast<double>(n);
        ++log.reinitialised;
        continue;
      }
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const double w = resp(r, j);
        if (w == 0.0) continue;
        const auto xr = x.row(r);
        for (std::size_t c = 0; c < d; ++c) mean[c] += w * xr[c];
      }
      for (double& v : mean) v /= mass;
      double spread = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        if (resp(r, j) == 0.0) continue;
        spread += resp(r, j) * squared_distance(x.row(r), mean);
      }
      mix.variances[j] = std::max(var_floor, spread / (mass * static_cast<double>(d)));
      mix.priors[j] = mass / static_cast<double>(n);
    }
    double prior_sum = 0.0;
    for (double p : mix.priors) prior_sum += p;
    for (double& p : mix.priors) p /= prior_sum;
  }
  log.log_likelihood.push_back(expectation(mix, x, resp));

  CentreLayout layout{mix.means, std::vector<double>(m)};
  for (std::size_t j = 0; j < m; ++j) {
    layout.widths[j] = std::max(kMinGaussianWidth, std::sqrt(mix.variances[j]));
  }
  return layout;
}

Matrix rbf_design_matrix(RbfActivation activation, const CentreLayout& layout,
                         const Matrix& inputs) {
  const std::size_t m = layout.centres.rows();
  if (inputs.cols() != layout.centres.cols()) {
    throw ShapeError("rbf: centres have " + std::to_string(layout.centres.cols()) +
                     " dimensions, inputs " + inputs.shape());
  }
  if (activation == RbfActivation::gaussian && layout.widths.size() != m) {
    throw ShapeError("rbf: gaussian layout needs one width per centre");
  }
  Matrix phi(inputs.rows(), m + 1);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    auto row = phi.row(r);
    for (std::size_t j = 0; j < m; ++j) {
      const double dist = std::sqrt(squared_distance(inputs.row(r), layout.centres.row(j)));
      const double width = activation == RbfActivation::gaussian ? layout.widths[j] : 1.0;
      row[j] = rbf_basis(activation, dist, width);
    }
    row[m] = 1.0;
  }
  return phi;
}

RbfModel rbf_train(const RbfConfig& config, const PatternSet& patterns,
                   const std::optional<CentreLayout>& reuse) {
  config.validate();
  if (patterns.size() == 0) throw std::invalid_argument("rbf_train: no patterns");

  CentreLayout layout;
  if (reuse) {
    if (reuse->centres.rows() != config.n_hidden || reuse->centres.cols() != config.n_inputs) {
      throw ShapeError("rbf_train: reused centres " + reuse->centres.shape() +
                       " do not match config");
    }
    layout = *reuse;
  } else {
    layout = rbf_place_centres_em(patterns, config);
  }
  if (config.activation == RbfActivation::gaussian) {
    for (double w : layout.widths) {
      if (!(w > 0.0)) throw std::invalid_argument("rbf_train: gaussian widths must be positive");
    }
  }

  const Matrix phi = rbf_design_matrix(config.activation, layout, patterns.inputs);
  RbfModel model;
  model.weights = solve_least_squares(phi, patterns.targets);
  model.centres = std::move(layout.centres);
  model.widths = std::move(layout.widths);
  model.config = config;

  const Matrix fitted = matmul(phi, model.weights);
  const auto predicted = patterns.to_demand(fitted.entries());
  const auto actual = patterns.actual_demands();
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) continue;
    sum += 100.0 * std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
    ++counted;
  }
  model.training_error = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
  return model;
}

Matrix rbf_forward(const RbfModel& model, const Matrix& inputs) {
  const Matrix phi =
      rbf_design_matrix(model.config.activation, {model.centres, model.widths}, inputs);
  return matmul(phi, model.weights);
}

}  // namespace demandcast
