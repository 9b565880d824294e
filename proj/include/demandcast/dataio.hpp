#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "demandcast/numerics.hpp"

namespace demandcast {

using Date = std::chrono::sys_days;

/// Malformed input file; carries the 1-based line number when known.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses `YYYY-MM-DD`; returns nullopt for anything else, including invalid days.
std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(Date date);
int calendar_year(Date date);

struct Observation {
  Date date;
  double demand_ml;
};

struct PopulationEstimate {
  int year;
  std::int64_t population;
};

/// Daily demand record plus mid-year population estimates.
struct DemandSeries {
  std::vector<Observation> observations;
  std::vector<PopulationEstimate> populations;
  /// Rows dropped at load time because the demand value was absent.
  std::size_t discarded = 0;

  std::size_t size() const noexcept { return observations.size(); }
  std::vector<double> demands() const;
  double mean_demand() const;
  /// Throws std::out_of_range when no estimate covers `year`.
  std::int64_t population_for(int year) const;
  /// Checks ordering, positivity and population coverage; throws FormatError.
  void validate() const;
};

DemandSeries load_csv(const std::filesystem::path& demand_path,
                      const std::filesystem::path& population_path);
void write_demand_csv(const std::filesystem::path& path, const DemandSeries& series);
void write_population_csv(const std::filesystem::path& path, const DemandSeries& series);

/// Min-max bounds of one column: x' = (x - x_min) / (x_max - x_min).
struct Scaler {
  double x_min = 0.0;
  double x_max = 1.0;

  double apply(double x) const { return (x - x_min) / (x_max - x_min); }
  double invert(double scaled) const { return x_min + scaled * (x_max - x_min); }
  friend bool operator==(const Scaler&, const Scaler&) = default;
};

struct Normalized {
  std::vector<double> values;
  Scaler scaler;
};

/// Scales `values` with `scaler`, or with bounds fitted to `values` when absent.
Normalized normalize(std::span<const double> values, std::optional<Scaler> scaler = std::nullopt);
std::vector<double> denormalize(std::span<const double> scaled, const Scaler& scaler);

/// One scaler per input column plus one for the target.
struct FeatureScaling {
  std::vector<Scaler> inputs;
  Scaler target;
};

/// Supervised patterns: lagged demands (oldest first), optionally the
/// population of the target day's year, and the next-day demand as target.
struct PatternSet {
  Matrix inputs;
  Matrix targets;
  std::size_t lag_count = 0;
  bool includes_population = false;
  /// Absent while patterns are still in raw units.
  std::optional<FeatureScaling> scaling;
  std::vector<Date> target_dates;

  std::size_t size() const noexcept { return inputs.rows(); }
  std::size_t input_count() const noexcept { return inputs.cols(); }
  PatternSet slice(std::size_t first, std::size_t count) const;
  PatternSet with_scaling(const FeatureScaling& scaling) const;
  /// Targets in megaliters.
  std::vector<double> actual_demands() const;
  /// Maps model outputs (scaled target units) back to megaliters.
  std::vector<double> to_demand(std::span<const double> outputs) const;
};

PatternSet build_patterns(const DemandSeries& series, std::size_t lag_count,
                          bool include_population);

struct SplitFractions {
  double train = 1470.0 / 3470.0;
  double validation = 1005.0 / 3470.0;
  double test = 995.0 / 3470.0;
};

struct SplitSizes {
  std::size_t train;
  std::size_t validation;
  std::size_t test;
};

/// Pattern counts per split: train and validation rounded, test takes the rest.
SplitSizes split_sizes(std::size_t n, const SplitFractions& fractions);

struct SplitSet {
  PatternSet train;
  PatternSet validation;
  PatternSet test;
};

/// Contiguous train -> validation -> test split of raw patterns. Scalers are
/// fitted on the training split and applied to all three.
SplitSet split_chronological(const PatternSet& patterns, const SplitFractions& fractions = {});

struct SynthParams {
  std::size_t days = 3473;
  Date start = std::chrono::sys_days{std::chrono::year{1997} / std::chrono::January / 4};
  double base_demand = 2250.0;
  double growth = 0.04;
  double weekly_amp = 0.04;
  double annual_amp = 0.08;
  double noise_sd = 80.0;
  std::int64_t pop_start = 8324886;
  double pop_growth_rate = 0.0313;
};

/// Seasonal, growing demand with Gaussian noise and geometric population growth.
DemandSeries synthesize_series(Rng& rng, const SynthParams& params);

}  // namespace demandcast
