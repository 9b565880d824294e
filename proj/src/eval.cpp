#include "demandcast/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace demandcast {

double percentage_error(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != actuals.size() || actuals.empty()) {
    throw std::invalid_argument("percentage_error: need equal nonzero lengths, got " +
                                std::to_string(predictions.size()) + " and " +
                                std::to_string(actuals.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (actuals[i] == 0.0) {
      throw std::domain_error("percentage_error: actual value " + std::to_string(i) +
                              " is zero");
    }
    sum += std::abs(predictions[i] - actuals[i]) / std::abs(actuals[i]);
  }
  return 100.0 * sum / static_cast<double>(actuals.size());
}

Tolerance fixed_tolerance(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  return {tau, ToleranceRule::fixed};
}

double tolerance_accuracy(std::span<const double> predictions, std::span<const double> actuals,
                          const Tolerance& tol) {
  if (predictions.size() != actuals.size() || actuals.empty()) {
    throw std::invalid_argument("tolerance_accuracy: need equal nonzero lengths");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (std::abs(predictions[i] - actuals[i]) <= tol.tau) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(actuals.size());
}

Tolerance derive_tolerance(const DemandSeries& series, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("derive_tolerance: fraction must lie in (0, 1)");
  }
  if (series.observations.empty()) throw std::invalid_argument("derive_tolerance: empty series");
  return {fraction * series.mean_demand(), ToleranceRule::fraction_of_mean};
}

Matrix predict(const TrainedModel& model, const Matrix& inputs) {
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MlpModel>) return mlp_forward(m, inputs);
        else if constexpr (std::is_same_v<T, RbfModel>) return rbf_forward(m, inputs);
        else return svr_predict(m, inputs);
      },
      model);
}

double model_training_error(const TrainedModel& model) {
  return std::visit([](const auto& m) { return m.training_error; }, model);
}

EvalReport evaluate(const TrainedModel& model, const PatternSet& patterns, const Tolerance& tol,
                    std::string label) {
  const Matrix outputs = predict(model, patterns.inputs);
  const auto predicted = patterns.to_demand(outputs.entries());
  const auto actual = patterns.actual_demands();
  EvalReport report;
  report.model_label = std::move(label);
  report.error_pct = percentage_error(predicted, actual);
  report.accuracy_pct = tolerance_accuracy(predicted, actual, tol);
  return report;
}

namespace {

// Strict "a ranks above b" for successful reports.
bool ranks_above(const EvalReport& a, const EvalReport& b) {
  if (a.accuracy_pct != b.accuracy_pct) return a.accuracy_pct > b.accuracy_pct;
  if (a.error_pct != b.error_pct) return a.error_pct < b.error_pct;
  if (a.training_error != b.training_error) return a.training_error < b.training_error;
  return a.elapsed_seconds < b.elapsed_seconds;
}

}  // namespace

std::size_t pick_genius_index(std::span<const EvalReport> reports) {
  std::size_t best = reports.size();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].failure) continue;
    if (best == reports.size() || ranks_above(reports[i], reports[best])) best = i;
  }
  if (best == reports.size()) throw std::invalid_argument("pick_genius: no successful reports");
  return best;
}

EvalReport pick_genius(std::span<const EvalReport> reports) {
  return reports[pick_genius_index(reports)];
}

std::vector<LabelledMlp> default_mlp_sweep(std::size_t n_inputs, std::uint64_t seed) {
  std::vector<LabelledMlp> sweep;
  for (auto activation : {OutputActivation::linear, OutputActivation::logistic}) {
    for (auto optimizer : {MlpOptimizer::scg, MlpOptimizer::conjgrad, MlpOptimizer::quasinew}) {
      for (std::size_t hidden : {9, 10}) {
        MlpConfig config;
        config.n_inputs = n_inputs;
        config.n_hidden = hidden;
        config.output_activation = activation;
        config.optimizer = optimizer;
        config.seed = derive_seed(seed, 100 + sweep.size());
        sweep.push_back({"AZ" + std::to_string(sweep.size() + 1), config});
      }
    }
  }
  return sweep;
}

std::vector<LabelledRbf> default_rbf_sweep(std::size_t n_inputs, std::uint64_t seed) {
  std::vector<LabelledRbf> sweep;
  for (auto activation : {RbfActivation::gaussian, RbfActivation::tps, RbfActivation::r4logr}) {
    for (std::size_t hidden : {9, 10}) {
      RbfConfig config;
      config.n_inputs = n_inputs;
      config.n_hidden = hidden;
      config.activation = activation;
      config.seed = derive_seed(seed, 200 + sweep.size());
      std::optional<std::string> reuse;
      if (activation != RbfActivation::gaussian) reuse = hidden == 9 ? "AX1" : "AX2";
      sweep.push_back({"AX" + std::to_string(sweep.size() + 1), config, reuse});
    }
  }
  return sweep;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Job {
  std::string label;
  std::function<TrainedModel()> train;
};

// Runs jobs on up to `threads` workers; slot i of the result belongs to job i.
void run_jobs(const std::vector<Job>& jobs, const PatternSet& validation, const Tolerance& tol,
              const ExperimentOptions& options, ExperimentResult& out, std::size_t first_slot) {
  auto run_one = [&](std::size_t i) {
    const Job& job = jobs[i];
    EvalReport& report = out.reports[first_slot + i];
    report.model_label = job.label;
    if (options.cancel && options.cancel->load()) {
      report.failure = "cancelled";
      return;
    }
    try {
      const auto start = Clock::now();
      TrainedModel model = job.train();
      const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
      report = evaluate(model, validation, tol, job.label);
      report.elapsed_seconds = elapsed;
      out.models[first_slot + i] = std::move(model);
    } catch (const std::exception& e) {
      report = EvalReport{};
      report.model_label = job.label;
      report.failure = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, jobs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_one(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) run_one(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Training-set MAPE in megaliters, shared definition across families.
double training_mape(const TrainedModel& model, const PatternSet& train) {
  const Matrix outputs = predict(model, train.inputs);
  const auto predicted = train.to_demand(outputs.entries());
  return percentage_error(predicted, train.actual_demands());
}

void fill_training_errors(ExperimentResult& result, const PatternSet& train) {
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    if (!result.models[i]) continue;
    try {
      result.reports[i].training_error = training_mape(*result.models[i], train);
    } catch (const std::exception& e) {
      result.reports[i].failure = std::string("training error undefined: ") + e.what();
    }
  }
}

void mark_cancelled(ExperimentResult& result, const ExperimentOptions& options) {
  result.cancelled = options.cancel && options.cancel->load();
}

}  // namespace

ExperimentResult run_svr_experiment(const SplitSet& split, const Tolerance& tol,
                                    const ExperimentOptions& options) {
  auto sweep = default_kernel_sweep();
  ExperimentResult result;
  result.reports.resize(sweep.size());
  result.models.resize(sweep.size());
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    SvrConfig config = sweep[i];
    if (options.svr_c) config.c = *options.svr_c;
    if (options.svr_epsilon) config.epsilon = *options.svr_epsilon;
    config.seed = derive_seed(options.seed, 300 + i);
    jobs.push_back({config.kernel.label(),
                    [config, &split] { return TrainedModel{svr_train(config, split.train)}; }});
  }
  run_jobs(jobs, split.validation, tol, options, result, 0);
  fill_training_errors(result, split.train);
  mark_cancelled(result, options);
  return result;
}

ExperimentResult run_ann_experiment(const SplitSet& split, const Tolerance& tol,
                                    const ExperimentOptions& options) {
  const std::size_t d = split.train.input_count();
  const auto mlps = default_mlp_sweep(d, options.seed);
  const auto rbfs = default_rbf_sweep(d, options.seed);
  ExperimentResult result;
  result.reports.resize(mlps.size() + rbfs.size());
  result.models.resize(mlps.size() + rbfs.size());

  // Phase one: every MLP and the Gaussian RBF networks.
  std::vector<Job> first;
  for (const auto& entry : mlps) {
    first.push_back({entry.label, [config = entry.config, &split] {
                       return TrainedModel{mlp_train(config, split.train)};
                     }});
  }
  std::vector<std::size_t> gaussian_slots;
  for (std::size_t i = 0; i < rbfs.size(); ++i) {
    if (rbfs[i].reuse_from) continue;
    gaussian_slots.push_back(mlps.size() + i);
    first.push_back({rbfs[i].label, [config = rbfs[i].config, &split] {
                       return TrainedModel{rbf_train(config, split.train)};
                     }});
  }
  // Gaussian nets are AX1/AX2 and occupy the slots right after the MLPs.
  run_jobs(first, split.validation, tol, options, result, 0);

  // Phase two: TPS and r4logr networks on the Gaussian networks' centres.
  std::vector<Job> second;
  const std::size_t second_slot = mlps.size() + gaussian_slots.size();
  for (std::size_t i = 0; i < rbfs.size(); ++i) {
    if (!rbfs[i].reuse_from) continue;
    const std::string& donor = *rbfs[i].reuse_from;
    std::optional<CentreLayout> layout;
    for (std::size_t slot : gaussian_slots) {
      if (result.reports[slot].model_label == donor && result.models[slot]) {
        const auto& g = std::get<RbfModel>(*result.models[slot]);
        layout = CentreLayout{g.centres, g.widths};
      }
    }
    second.push_back({rbfs[i].label, [config = rbfs[i].config, layout, donor, &split] {
                        if (!layout) throw std::runtime_error("centre donor " + donor + " failed");
                        return TrainedModel{rbf_train(config, split.train, layout)};
                      }});
  }
  run_jobs(second, split.validation, tol, options, result, second_slot);

  fill_training_errors(result, split.train);
  mark_cancelled(result, options);
  return result;
}

Genius decide_overall_genius(const EvalReport& svg_test, const EvalReport& ang_test) {
  const EvalReport pair[] = {svg_test, ang_test};
  return pick_genius_index(pair) == 0 ? Genius::svg : Genius::ang;
}

TournamentResult run_tournament(const SplitSet& split, const Tolerance& tol,
                                const ExperimentOptions& options) {
  TournamentResult t;
  t.svr = run_svr_experiment(split, tol, options);
  t.ann = run_ann_experiment(split, tol, options);
  if (t.svr.cancelled || t.ann.cancelled) throw std::runtime_error("tournament cancelled");

  t.svg_index = pick_genius_index(t.svr.reports);
  t.ang_index = pick_genius_index(t.ann.reports);
  t.svg_validation = t.svr.reports[t.svg_index];
  t.ang_validation = t.ann.reports[t.ang_index];
  t.svg_model = *t.svr.models[t.svg_index];
  t.ang_model = *t.ann.models[t.ang_index];

  t.svg_test = evaluate(t.svg_model, split.test, tol, t.svg_validation.model_label);
  t.svg_test.training_error = t.svg_validation.training_error;
  t.svg_test.elapsed_seconds = t.svg_validation.elapsed_seconds;
  t.ang_test = evaluate(t.ang_model, split.test, tol, t.ang_validation.model_label);
  t.ang_test.training_error = t.ang_validation.training_error;
  t.ang_test.elapsed_seconds = t.ang_validation.elapsed_seconds;
  t.og = decide_overall_genius(t.svg_test, t.ang_test);
  return t;
}

InputSelection select_input_count(std::span<const std::size_t> candidates,
                                  const DemandSeries& series, const SplitFractions& fractions,
                                  std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("select_input_count: no candidates");
  InputSelection selection;
  for (std::size_t count : candidates) {
    if (count < 2) throw std::invalid_argument("select_input_count: candidates must be >= 2");
    InputCandidate row;
    row.inputs = count;
    try {
      const SplitSet split =
          split_chronological(build_patterns(series, count - 1, true), fractions);
      MlpConfig config;
      config.n_inputs = count;
      config.n_hidden = 10;
      config.output_activation = OutputActivation::linear;
      config.optimizer = MlpOptimizer::scg;
      config.seed = derive_seed(seed, 400 + count);
      const TrainedModel model{mlp_train(config, split.train)};
      row.training_error = training_mape(model, split.train);
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    selection.table.push_back(row);
  }
  const InputCandidate* best = nullptr;
  for (const auto& row : selection.table) {
    if (row.failure) continue;
    if (!best || row.training_error < best->training_error) best = &row;
  }
  if (!best) throw std::runtime_error("select_input_count: every candidate failed to train");
  selection.chosen = best->inputs;
  return selection;
}

}  // namespace demandcast
