#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "demandcast/dataio.hpp"
#include "demandcast/mlp.hpp"
#include "demandcast/rbf.hpp"
#include "demandcast/svr.hpp"

namespace demandcast {

// ---------------------------------------------------------------- metrics

/// Mean absolute percentage error, 100 * mean(|p - a| / |a|). Throws on a zero actual.
double percentage_error(std::span<const double> predictions, std::span<const double> actuals);

enum class ToleranceRule { fixed, fraction_of_mean };

/// Absolute acceptance band in megaliters.
struct Tolerance {
  double tau = 500.0;
  ToleranceRule rule = ToleranceRule::fixed;
};

Tolerance fixed_tolerance(double tau);

/// Percentage of predictions with |p - a| <= tau.
double tolerance_accuracy(std::span<const double> predictions, std::span<const double> actuals,
                          const Tolerance& tol);

inline constexpr double kDefaultToleranceFraction = 0.19;

/// tau = fraction * mean demand.
Tolerance derive_tolerance(const DemandSeries& series, double fraction = kDefaultToleranceFraction);

// ---------------------------------------------------------------- models

using TrainedModel = std::variant<MlpModel, RbfModel, SvrModel>;

/// Raw model outputs in scaled target units, n x 1.
Matrix predict(const TrainedModel& model, const Matrix& inputs);
double model_training_error(const TrainedModel& model);

struct EvalReport {
  std::string model_label;
  double error_pct = 0.0;
  double accuracy_pct = 0.0;
  double elapsed_seconds = 0.0;
  /// Training-set MAPE (%), identical definition for every family.
  double training_error = 0.0;
  /// Set when the model could not be trained; such reports never win.
  std::optional<std::string> failure;
};

/// Predicts `patterns`, maps back to megaliters and scores against the targets.
EvalReport evaluate(const TrainedModel& model, const PatternSet& patterns, const Tolerance& tol,
                    std::string label);

/// Index of the winner: highest accuracy, then lowest error, lowest training
/// error, lowest elapsed time, earliest position. Failed reports are skipped.
std::size_t pick_genius_index(std::span<const EvalReport> reports);
EvalReport pick_genius(std::span<const EvalReport> reports);

// ---------------------------------------------------------------- sweeps

struct LabelledMlp {
  std::string label;
  MlpConfig config;
};

struct LabelledRbf {
  std::string label;
  RbfConfig config;
  /// Label of the Gaussian network whose centres are reused, if any.
  std::optional<std::string> reuse_from;
};

/// AZ1..AZ12: {linear, logistic} x {scg, conjgrad, quasinew} x {9, 10 hidden}.
std::vector<LabelledMlp> default_mlp_sweep(std::size_t n_inputs, std::uint64_t seed);
/// AX1..AX6: {gaussian, tps, r4logr} x {9, 10}; AX3/AX5 reuse AX1, AX4/AX6 reuse AX2.
std::vector<LabelledRbf> default_rbf_sweep(std::size_t n_inputs, std::uint64_t seed);

struct ExperimentOptions {
  std::uint64_t seed = 1;
  /// Worker threads for independent models; results do not depend on it.
  std::size_t threads = 1;
  /// Polled between models; when set, remaining models are reported as failed.
  const std::atomic<bool>* cancel = nullptr;
  /// Overrides applied to every SVR sweep entry.
  std::optional<double> svr_c;
  std::optional<double> svr_epsilon;
};

struct ExperimentResult {
  std::vector<EvalReport> reports;
  /// Parallel to reports; empty where training failed.
  std::vector<std::optional<TrainedModel>> models;
  bool cancelled = false;
};

/// Trains every kernel of the default sweep on split.train and scores split.validation.
ExperimentResult run_svr_experiment(const SplitSet& split, const Tolerance& tol,
                                    const ExperimentOptions& options = {});

/// Twelve MLPs then six RBF networks, scored on split.validation.
ExperimentResult run_ann_experiment(const SplitSet& split, const Tolerance& tol,
                                    const ExperimentOptions& options = {});

enum class Genius { svg, ang };

struct TournamentResult {
  ExperimentResult svr;
  ExperimentResult ann;
  std::size_t svg_index = 0;
  std::size_t ang_index = 0;
  EvalReport svg_validation;
  EvalReport ang_validation;
  EvalReport svg_test;
  EvalReport ang_test;
  Genius og = Genius::ang;
  TrainedModel svg_model;
  TrainedModel ang_model;
};

/// Picks SVG and ANG on validation, re-scores both on the test set and picks the OG.
TournamentResult run_tournament(const SplitSet& split, const Tolerance& tol,
                                const ExperimentOptions& options = {});

/// Final stage on its own: the OG among two test-set reports (svg first).
Genius decide_overall_genius(const EvalReport& svg_test, const EvalReport& ang_test);

struct InputCandidate {
  std::size_t inputs = 0;
  double training_error = 0.0;
  std::optional<std::string> failure;
};

struct InputSelection {
  std::vector<InputCandidate> table;
  std::size_t chosen = 0;
};

/// Trains the reference MLP (linear output, SCG, 10 hidden) for each input
/// count (count - 1 lags plus population) and keeps the least training error.
InputSelection select_input_count(std::span<const std::size_t> candidates,
                                  const DemandSeries& series, const SplitFractions& fractions = {},
                                  std::uint64_t seed = 1);

}  // namespace demandcast
