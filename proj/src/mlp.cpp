#include "demandcast/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "demandcast/optimize.hpp"

namespace demandcast {

std::string_view to_string(OutputActivation a) {
  switch (a) {
    case OutputActivation::linear: return "linear";
    case OutputActivation::logistic: return "logistic";
    case OutputActivation::softmax: return "softmax";
  }
  return "?";
}

std::string_view to_string(MlpOptimizer o) {
  switch (o) {
    case MlpOptimizer::scg: return "scg";
    case MlpOptimizer::conjgrad: return "conjgrad";
    case MlpOptimizer::quasinew: return "quasinew";
  }
  return "?";
}

OutputActivation parse_output_activation(std::string_view text) {
  for (auto a : {OutputActivation::linear, OutputActivation::logistic, OutputActivation::softmax}) {
    if (text == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown output activation '" + std::string(text) + "'");
}

MlpOptimizer parse_mlp_optimizer(std::string_view text) {
  for (auto o : {MlpOptimizer::scg, MlpOptimizer::conjgrad, MlpOptimizer::quasinew}) {
    if (text == to_string(o)) return o;
  }
  throw std::invalid_argument("unknown MLP optimizer '" + std::string(text) + "'");
}

void MlpConfig::validate() const {
  if (n_inputs < 1) throw std::invalid_argument("MlpConfig: n_inputs must be >= 1");
  if (n_hidden < 1) throw std::invalid_argument("MlpConfig: n_hidden must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("MlpConfig: max_iters must be >= 1");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("MlpConfig: grad_tol must be > 0");
}

MlpModel mlp_zero(const MlpConfig& config, std::size_t n_outputs) {
  config.validate();
  MlpModel model;
  model.config = config;
  model.w1 = Matrix(config.n_inputs + 1, config.n_hidden);
  model.w2 = Matrix(config.n_hidden + 1, n_outputs);
  return model;
}

MlpModel mlp_init(const MlpConfig& config, std::size_t n_outputs) {
  MlpModel model = mlp_zero(config, n_outputs);
  Rng rng(config.seed);
  const double sd1 = 1.0 / std::sqrt(static_cast<double>(config.n_inputs + 1));
  const double sd2 = 1.0 / std::sqrt(static_cast<double>(config.n_hidden + 1));
  for (double& w : model.w1.entries()) w = rng.normal(0.0, sd1);
  for (double& w : model.w2.entries()) w = rng.normal(0.0, sd2);
  return model;
}

std::vector<double> flatten_weights(const MlpModel& model) {
  std::vector<double> flat(model.w1.entries().begin(), model.w1.entries().end());
  flat.insert(flat.end(), model.w2.entries().begin(), model.w2.entries().end());
  return flat;
}

void assign_weights(MlpModel& model, std::span<const double> flat) {
  if (flat.size() != model.parameter_count()) {
    throw ShapeError("assign_weights: " + std::to_string(flat.size()) + " values for " +
                     std::to_string(model.parameter_count()) + " weights");
  }
  std::copy_n(flat.begin(), model.w1.size(), model.w1.entries().begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(model.w1.size()), flat.end(),
            model.w2.entries().begin());
}

namespace {

struct ForwardPass {
  Matrix hidden;   // n x M, tanh activations
  Matrix outputs;  // n x K
};

void apply_output_activation(OutputActivation act, std::span<double> row) {
  switch (act) {
    case OutputActivation::linear:
      break;
    case OutputActivation::logistic:
      for (double& v : row) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case OutputActivation::softmax: {
      const double peak = *std::max_element(row.begin(), row.end());
      double sum = 0.0;
      for (double& v : row) {
        v = std::exp(v - peak);
        sum += v;
      }
      for (double& v : row) v /= sum;
      break;
    }
  }
}

ForwardPass forward_pass(const MlpModel& model, const Matrix& inputs) {
  const std::size_t d = model.w1.rows() - 1;
  const std::size_t m = model.w1.cols();
  const std::size_t k = model.w2.cols();
  if (inputs.cols() != d) {
    throw ShapeError("mlp_forward: model expects " + std::to_string(d) + " inputs, got " +
                     inputs.shape());
  }
  const std::size_t n = inputs.rows();
  ForwardPass pass{Matrix(n, m), Matrix(n, k)};
  const auto bias1 = model.w1.row(d);
  const auto bias2 = model.w2.row(m);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = inputs.row(r);
    auto z = pass.hidden.row(r);
    std::copy(bias1.begin(), bias1.end(), z.begin());
    for (std::size_t i = 0; i < d; ++i) {
      const auto wi = model.w1.row(i);
      for (std::size_t j = 0; j < m; ++j) z[j] += x[i] * wi[j];
    }
    for (double& v : z) v = std::tanh(v);

    auto y = pass.outputs.row(r);
    std::copy(bias2.begin(), bias2.end(), y.begin());
    for (std::size_t j = 0; j < m; ++j) {
      const auto wj = model.w2.row(j);
      for (std::size_t c = 0; c < k; ++c) y[c] += z[j] * wj[c];
    }
    apply_output_activation(model.config.output_activation, y);
  }
  return pass;
}

void check_targets(const MlpModel& model, const PatternSet& patterns) {
  if (patterns.targets.cols() != model.n_outputs() ||
      patterns.targets.rows() != patterns.inputs.rows()) {
    throw ShapeError("MLP with " + std::to_string(model.n_outputs()) + " outputs given targets " +
                     patterns.targets.shape());
  }
}

}  // namespace

Matrix mlp_forward(const MlpModel& model, const Matrix& inputs) {
  return forward_pass(model, inputs).outputs;
}

double mlp_error(const MlpModel& model, const PatternSet& patterns) {
  check_targets(model, patterns);
  const Matrix y = mlp_forward(model, patterns.inputs);
  double e = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y.entries()[i] - patterns.targets.entries()[i];
    e += r * r;
  }
  return 0.5 * e;
}

namespace {

// Objective and gradient in one pass; `grad` follows the flattened layout.
double error_and_gradient(const MlpModel& model, const PatternSet& patterns,
                          std::span<double> grad) {
  const std::size_t d = model.w1.rows() - 1;
  const std::size_t m = model.w1.cols();
  const std::size_t k = model.w2.cols();
  const ForwardPass pass = forward_pass(model, patterns.inputs);
  std::fill(grad.begin(), grad.end(), 0.0);
  double* g1 = grad.data();
  double* g2 = grad.data() + model.w1.size();

  std::vector<double> delta_out(k), delta_hidden(m);
  double error = 0.0;
  for (std::size_t r = 0; r < patterns.size(); ++r) {
    const auto x = patterns.inputs.row(r);
    const auto z = pass.hidden.row(r);
    const auto y = pass.outputs.row(r);
    const auto t = patterns.targets.row(r);

    for (std::size_t c = 0; c < k; ++c) {
      const double res = y[c] - t[c];
      error += res * res;
      delta_out[c] = res;
    }
    switch (model.config.output_activation) {
      case OutputActivation::linear:
        break;
      case OutputActivation::logistic:
        for (std::size_t c = 0; c < k; ++c) delta_out[c] *= y[c] * (1.0 - y[c]);
        break;
      case OutputActivation::softmax: {
        double weighted = 0.0;
        for (std::size_t c = 0; c < k; ++c) weighted += (y[c] - t[c]) * y[c];
        for (std::size_t c = 0; c < k; ++c) delta_out[c] = y[c] * ((y[c] - t[c]) - weighted);
        break;
      }
    }

    for (std::size_t j = 0; j < m; ++j) {
      const auto w2j = model.w2.row(j);
      double back = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        g2[j * k + c] += z[j] * delta_out[c];
        back += w2j[c] * delta_out[c];
      }
      delta_hidden[j] = (1.0 - z[j] * z[j]) * back;
    }
    for (std::size_t c = 0; c < k; ++c) g2[m * k + c] += delta_out[c];

    for (std::size_t i = 0; i < d; ++i) {
      double* gi = g1 + i * m;
      for (std::size_t j = 0; j < m; ++j) gi[j] += x[i] * delta_hidden[j];
    }
    double* gb = g1 + d * m;
    for (std::size_t j = 0; j < m; ++j) gb[j] += delta_hidden[j];
  }
  return 0.5 * error;
}

}  // namespace

std::vector<double> mlp_gradient(const MlpModel& model, const PatternSet& patterns) {
  check_targets(model, patterns);
  std::vector<double> grad(model.parameter_count());
  error_and_gradient(model, patterns, grad);
  return grad;
}

MlpModel mlp_train_from(MlpModel model, const PatternSet& patterns) {
  if (patterns.size() == 0) throw std::invalid_argument("mlp_train: no patterns");
  model.config.validate();
  check_targets(model, patterns);

  MlpModel scratch = model;
  const ObjectiveFn objective = [&](std::span<const double> x, std::span<double> grad) {
    assign_weights(scratch, x);
    return error_and_gradient(scratch, patterns, grad);
  };
  const MinimizeOptions options{model.config.max_iters, model.config.grad_tol};

  MinimizeResult result;
  switch (model.config.optimizer) {
    case MlpOptimizer::scg:
      result = minimize_scg(flatten_weights(model), objective, options);
      break;
    case MlpOptimizer::conjgrad:
      result = minimize_conjgrad(flatten_weights(model), objective, options);
      break;
    case MlpOptimizer::quasinew:
      result = minimize_bfgs(flatten_weights(model), objective, options);
      break;
  }
  assign_weights(model, result.x);
  model.training_error = result.value;
  model.iterations = result.iterations;
  model.history = std::move(result.history);
  return model;
}

MlpModel mlp_train(const MlpConfig& config, const PatternSet& patterns) {
  if (patterns.size() == 0) throw std::invalid_argument("mlp_train: no patterns");
  if (patterns.input_count() != config.n_inputs) {
    throw ShapeError("mlp_train: config expects " + std::to_string(config.n_inputs) +
                     " inputs, patterns have " + std::to_string(patterns.input_count()));
  }
  return mlp_train_from(mlp_init(config, patterns.targets.cols()), patterns);
}

}  // namespace demandcast
