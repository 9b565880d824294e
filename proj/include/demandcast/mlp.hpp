#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demandcast/dataio.hpp"
#include "demandcast/numerics.hpp"

namespace demandcast {

enum class OutputActivation { linear, logistic, softmax };
enum class MlpOptimizer { scg, conjgrad, quasinew };

std::string_view to_string(OutputActivation a);
std::string_view to_string(MlpOptimizer o);
OutputActivation parse_output_activation(std::string_view text);
MlpOptimizer parse_mlp_optimizer(std::string_view text);

struct MlpConfig {
  std::size_t n_inputs = 5;
  std::size_t n_hidden = 10;
  OutputActivation output_activation = OutputActivation::linear;
  MlpOptimizer optimizer = MlpOptimizer::scg;
  std::size_t max_iters = 500;
  double grad_tol = 1e-6;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Two-layer perceptron with tanh hidden units.
///
/// Weight layout: w1 is (d+1) x M and w2 is (M+1) x K; in both the last row
/// holds the biases. Flattened parameter vectors list w1 row-major followed
/// by w2 row-major.
struct MlpModel {
  Matrix w1;
  Matrix w2;
  MlpConfig config;
  /// Sum-of-squares objective at the end of training.
  double training_error = 0.0;
  std::size_t iterations = 0;
  /// Objective after each optimizer iteration (not serialized).
  std::vector<double> history;

  std::size_t n_outputs() const noexcept { return w2.cols(); }
  std::size_t parameter_count() const noexcept { return w1.size() + w2.size(); }
};

/// Zero-initialised model of the configured shape.
MlpModel mlp_zero(const MlpConfig& config, std::size_t n_outputs = 1);
/// Gaussian initialisation, sd = 1/sqrt(fan-in) with the bias counted in fan-in.
MlpModel mlp_init(const MlpConfig& config, std::size_t n_outputs = 1);

std::vector<double> flatten_weights(const MlpModel& model);
void assign_weights(MlpModel& model, std::span<const double> flat);

Matrix mlp_forward(const MlpModel& model, const Matrix& inputs);

/// E = 1/2 * sum of squared output residuals.
double mlp_error(const MlpModel& model, const PatternSet& patterns);

/// Exact gradient of mlp_error with respect to the flattened weights.
std::vector<double> mlp_gradient(const MlpModel& model, const PatternSet& patterns);

/// Initialises from the config seed and trains with the configured optimizer.
MlpModel mlp_train(const MlpConfig& config, const PatternSet& patterns);

/// Trains starting from the weights already in `initial`.
MlpModel mlp_train_from(MlpModel initial, const PatternSet& patterns);

}  // namespace demandcast
