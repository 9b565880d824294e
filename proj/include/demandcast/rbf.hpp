#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "demandcast/dataio.hpp"
#include "demandcast/numerics.hpp"

namespace demandcast {

enum class RbfActivation { gaussian, tps, r4logr };

std::string_view to_string(RbfActivation a);
RbfActivation parse_rbf_activation(std::string_view text);

inline constexpr double kMinGaussianWidth = 1e-6;

struct RbfConfig {
  std::size_t n_inputs = 5;
  std::size_t n_hidden = 10;
  RbfActivation activation = RbfActivation::gaussian;
  std::size_t em_iters = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Centres (M x d) and per-centre Gaussian widths.
struct CentreLayout {
  Matrix centres;
  std::vector<double> widths;
};

struct EmTrace {
  /// Log-likelihood of the initial mixture followed by one entry per iteration.
  std::vector<double> log_likelihood;
  /// Components re-seeded after losing all responsibility mass.
  std::size_t reinitialised = 0;
};

struct RbfModel {
  Matrix centres;
  std::vector<double> widths;
  /// (M+1) x K output weights; the last row is the bias.
  Matrix weights;
  RbfConfig config;
  /// MAPE (%) on the training targets in original units (zero targets skipped).
  double training_error = 0.0;

  std::size_t n_hidden() const noexcept { return centres.rows(); }
  std::size_t n_inputs() const noexcept { return centres.cols(); }
};

/// gaussian: exp(-r^2 / (2 width^2)); tps: r^2 ln r; r4logr: r^4 ln r (both 0 at r = 0).
double rbf_basis(RbfActivation activation, double r, double width = 1.0);

/// Fits a spherical Gaussian mixture to the pattern inputs by EM and returns
/// its means as centres and its standard deviations as widths.
CentreLayout rbf_place_centres_em(const PatternSet& patterns, const RbfConfig& config,
                                  EmTrace* trace = nullptr);

/// n x (M+1) basis activations, last column all ones.
Matrix rbf_design_matrix(RbfActivation activation, const CentreLayout& layout,
                         const Matrix& inputs);

/// EM centres (or `reuse`) followed by pseudo-inverse output weights.
RbfModel rbf_train(const RbfConfig& config, const PatternSet& patterns,
                   const std::optional<CentreLayout>& reuse = std::nullopt);

Matrix rbf_forward(const RbfModel& model, const Matrix& inputs);

}  // namespace demandcast
