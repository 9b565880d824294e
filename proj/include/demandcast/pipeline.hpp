#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "demandcast/dataio.hpp"
#include "demandcast/eval.hpp"

namespace demandcast {

enum class SweepKind { svr, ann, tournament, input_select };
enum class DataSource { synthetic, csv };

std::string_view to_string(SweepKind s);
SweepKind parse_sweep(std::string_view text);

struct ToleranceSetting {
  ToleranceRule rule = ToleranceRule::fraction_of_mean;
  /// Megaliters for `fixed`, a fraction of mean demand otherwise.
  double value = kDefaultToleranceFraction;
};

/// Parses `fixed:<ml>` or `fraction:<f>`.
ToleranceSetting parse_tolerance_setting(std::string_view text);
std::string format_tolerance_setting(const ToleranceSetting& tau);

/// Everything a run needs. The resolved form is written to each run
/// directory and replays the run when passed back through --config.
struct RunConfig {
  DataSource source = DataSource::synthetic;
  std::filesystem::path demand_csv;
  std::filesystem::path population_csv;
  SynthParams synth;
  SplitFractions splits;
  /// Defaults to fixed:500 for CSV data and fraction:0.19 for synthetic data.
  std::optional<ToleranceSetting> tau;
  SweepKind sweep = SweepKind::tournament;
  std::uint64_t seed = 2006;
  std::filesystem::path out_dir;
  /// Model input count: inputs - 1 lagged demands plus population.
  std::size_t inputs = 5;
  std::vector<std::size_t> candidates{2, 3, 4, 5, 6};
  std::size_t threads = 1;
  std::optional<double> svr_c;
  std::optional<double> svr_epsilon;
};

/// Ordered key -> value settings, as read from a config file or flags.
using Settings = std::map<std::string, std::string>;

/// Reads `key = value` lines; `#` starts a comment.
Settings read_settings_file(const std::filesystem::path& path);
/// Overlays `overrides` on `base`. A data-source key in `overrides` replaces
/// the data source of `base` entirely.
Settings merge_settings(Settings base, const Settings& overrides);
/// Validates and resolves settings; unknown keys and conflicting data sources are errors.
RunConfig resolve_config(const Settings& settings, const std::filesystem::path& default_out_root);
/// Fully explicit snapshot of a resolved config.
std::string format_config(const RunConfig& config);

ToleranceSetting effective_tolerance_setting(const RunConfig& config);

/// Directory used when no output directory is given: $DEMANDCAST_OUT_ROOT or ./runs.
std::filesystem::path default_output_root();

/// Failure tied to one named pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunOutcome {
  bool complete = false;
  std::string failed_stage;
  std::string message;
};

/// Runs data manipulation -> model initialisation -> SVR/ANN experiments ->
/// performance analysis -> overall genius, writing every artifact into
/// config.out_dir. Never throws for stage failures; see RunOutcome.
RunOutcome run_pipeline(const RunConfig& config, std::ostream& log,
                        const std::atomic<bool>* cancel = nullptr);

/// Writes demand.csv, population.csv and synth.provenance into `out_dir`.
void write_synthetic_dataset(const SynthParams& params, std::uint64_t seed,
                             const std::filesystem::path& out_dir);

}  // namespace demandcast
