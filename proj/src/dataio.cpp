#include "demandcast/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

namespace demandcast {

namespace chr = std::chrono;

FormatError::FormatError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) return std::nullopt;
  return value;
}

bool is_missing_token(std::string_view text) {
  text = trim(text);
  return text.empty() || text == "NA" || text == "NaN" || text == "nan" || text == "null" ||
         text == "-";
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

void expect_header(std::ifstream& in, const std::filesystem::path& path,
                   std::string_view expected) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + " is empty", 1);
  if (trim(line) != expected) {
    throw FormatError(path.string() + ": expected header '" + std::string(expected) + "'", 1);
  }
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = parse_number<int>(text.substr(0, 4));
  const auto m = parse_number<unsigned>(text.substr(5, 2));
  const auto d = parse_number<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const chr::year_month_day ymd{chr::year{*y}, chr::month{*m}, chr::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  return chr::sys_days{ymd};
}

std::string format_iso_date(Date date) {
  const chr::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int calendar_year(Date date) { return static_cast<int>(chr::year_month_day{date}.year()); }

std::vector<double> DemandSeries::demands() const {
  std::vector<double> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.demand_ml);
  return out;
}

double DemandSeries::mean_demand() const {
  if (observations.empty()) throw std::invalid_argument("mean of empty demand series");
  double sum = 0.0;
  for (const auto& o : observations) sum += o.demand_ml;
  return sum / static_cast<double>(observations.size());
}

std::int64_t DemandSeries::population_for(int year) const {
  for (const auto& p : populations) {
    if (p.year == year) return p.population;
  }
  throw std::out_of_range("no population estimate for year " + std::to_string(year));
}

void DemandSeries::validate() const {
  if (observations.empty()) throw FormatError("demand series has no observations");
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (!(observations[i].demand_ml > 0.0) || !std::isfinite(observations[i].demand_ml)) {
      throw FormatError("demand on " + format_iso_date(observations[i].date) +
                        " is not strictly positive");
    }
    if (i > 0 && observations[i].date <= observations[i - 1].date) {
      throw FormatError("observation dates not strictly increasing at " +
                        format_iso_date(observations[i].date));
    }
  }
  for (std::size_t i = 1; i < populations.size(); ++i) {
    if (populations[i].year != populations[i - 1].year + 1) {
      throw FormatError("population years jump from " + std::to_string(populations[i - 1].year) +
                        " to " + std::to_string(populations[i].year));
    }
  }
  const int first = calendar_year(observations.front().date);
  const int last = calendar_year(observations.back().date);
  for (int year = first; year <= last; ++year) {
    try {
      (void)population_for(year);
    } catch (const std::out_of_range&) {
      throw FormatError("no population estimate for observation year " + std::to_string(year));
    }
  }
}

DemandSeries load_csv(const std::filesystem::path& demand_path,
                      const std::filesystem::path& population_path) {
  DemandSeries series;

  {
    auto in = open_input(demand_path);
    expect_header(in, demand_path, "date,demand_ml");
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_fields(line);
      if (fields.size() > 2) throw FormatError("expected 2 fields", line_no);
      const auto date = parse_iso_date(fields[0]);
      if (!date) throw FormatError("malformed date '" + std::string(fields[0]) + "'", line_no);
      if (fields.size() < 2 || is_missing_token(fields[1])) {
        ++series.discarded;
        continue;
      }
      const auto demand = parse_number<double>(fields[1]);
      if (!demand) throw FormatError("malformed demand '" + std::string(fields[1]) + "'", line_no);
      if (!(*demand > 0.0) || !std::isfinite(*demand)) {
        throw FormatError("demand must be strictly positive", line_no);
      }
      if (!series.observations.empty() && *date <= series.observations.back().date) {
        throw FormatError("dates must be strictly increasing", line_no);
      }
      series.observations.push_back({*date, *demand});
    }
    if (series.observations.empty()) {
      throw FormatError(demand_path.string() + " contains no demand observations");
    }
  }

  {
    auto in = open_input(population_path);
    expect_header(in, population_path, "year,population");
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_fields(line);
      if (fields.size() != 2) throw FormatError("expected 2 fields", line_no);
      const auto year = parse_number<int>(fields[0]);
      const auto pop = parse_number<std::int64_t>(fields[1]);
      if (!year) throw FormatError("malformed year '" + std::string(fields[0]) + "'", line_no);
      if (!pop || *pop <= 0) {
        throw FormatError("malformed population '" + std::string(fields[1]) + "'", line_no);
      }
      if (!series.populations.empty() && *year != series.populations.back().year + 1) {
        throw FormatError("population year gap before " + std::to_string(*year), line_no);
      }
      series.populations.push_back({*year, *pop});
    }
  }

  series.validate();
  return series;
}

void write_demand_csv(const std::filesystem::path& path, const DemandSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "date,demand_ml\n";
  char buf[64];
  for (const auto& o : series.observations) {
    std::snprintf(buf, sizeof buf, "%.2f", o.demand_ml);
    out << format_iso_date(o.date) << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_population_csv(const std::filesystem::path& path, const DemandSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "year,population\n";
  for (const auto& p : series.populations) out << p.year << ',' << p.population << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Normalized normalize(std::span<const double> values, std::optional<Scaler> scaler) {
  if (!scaler) {
    if (values.empty()) throw std::invalid_argument("normalize: empty column");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    scaler = Scaler{*lo, *hi};
  }
  if (!(scaler->x_max > scaler->x_min)) {
    throw std::invalid_argument("normalize: degenerate column (x_max == x_min == " +
                                std::to_string(scaler->x_min) + ")");
  }
  Normalized out{std::vector<double>(values.size()), *scaler};
  std::transform(values.begin(), values.end(), out.values.begin(),
                 [&](double x) { return scaler->apply(x); });
  return out;
}

std::vector<double> denormalize(std::span<const double> scaled, const Scaler& scaler) {
  std::vector<double> out(scaled.size());
  std::transform(scaled.begin(), scaled.end(), out.begin(),
                 [&](double x) { return scaler.invert(x); });
  return out;
}

PatternSet PatternSet::slice(std::size_t first, std::size_t count) const {
  PatternSet out;
  out.inputs = inputs.row_block(first, count);
  out.targets = targets.row_block(first, count);
  out.lag_count = lag_count;
  out.includes_population = includes_population;
  out.scaling = scaling;
  if (!target_dates.empty()) {
    out.target_dates.assign(target_dates.begin() + static_cast<std::ptrdiff_t>(first),
                            target_dates.begin() + static_cast<std::ptrdiff_t>(first + count));
  }
  return out;
}

PatternSet PatternSet::with_scaling(const FeatureScaling& fs) const {
  if (scaling) throw std::logic_error("patterns are already scaled");
  if (fs.inputs.size() != inputs.cols()) {
    throw ShapeError("scaling has " + std::to_string(fs.inputs.size()) + " input scalers for " +
                     std::to_string(inputs.cols()) + " columns");
  }
  PatternSet out = *this;
  for (std::size_t r = 0; r < out.inputs.rows(); ++r) {
    auto row = out.inputs.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = fs.inputs[c].apply(row[c]);
  }
  for (double& t : out.targets.entries()) t = fs.target.apply(t);
  out.scaling = fs;
  return out;
}

std::vector<double> PatternSet::actual_demands() const {
  return to_demand(targets.entries());
}

std::vector<double> PatternSet::to_demand(std::span<const double> outputs) const {
  if (!scaling) return {outputs.begin(), outputs.end()};
  return denormalize(outputs, scaling->target);
}

PatternSet build_patterns(const DemandSeries& series, std::size_t lag_count,
                          bool include_population) {
  if (lag_count < 1) throw std::invalid_argument("build_patterns: lag_count must be >= 1");
  const auto& obs = series.observations;
  if (obs.size() <= lag_count) {
    throw std::invalid_argument("build_patterns: " + std::to_string(obs.size()) +
                                " observations cannot fill a window of " +
                                std::to_string(lag_count) + " lags");
  }
  const std::size_t width = lag_count + (include_population ? 1 : 0);
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<Date> dates;
  const chr::days span{static_cast<int>(lag_count)};
  for (std::size_t t = lag_count; t < obs.size(); ++t) {
    // A window is usable only if its lag_count + 1 days are consecutive.
    if (obs[t].date - obs[t - lag_count].date != span) continue;
    for (std::size_t k = t - lag_count; k < t; ++k) inputs.push_back(obs[k].demand_ml);
    if (include_population) {
      inputs.push_back(static_cast<double>(series.population_for(calendar_year(obs[t].date))));
    }
    targets.push_back(obs[t].demand_ml);
    dates.push_back(obs[t].date);
  }
  if (targets.empty()) {
    throw std::invalid_argument("build_patterns: no gap-free window of " +
                                std::to_string(lag_count) + " lags");
  }
  PatternSet out;
  const std::size_t n = targets.size();
  out.inputs = Matrix(n, width, std::move(inputs));
  out.targets = Matrix(n, 1, std::move(targets));
  out.lag_count = lag_count;
  out.includes_population = include_population;
  out.target_dates = std::move(dates);
  return out;
}

SplitSizes split_sizes(std::size_t n, const SplitFractions& f) {
  for (double x : {f.train, f.validation, f.test}) {
    if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("split fractions must lie in (0, 1)");
  }
  if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  const double total = static_cast<double>(n);
  const auto train = static_cast<std::size_t>(std::llround(total * f.train));
  const auto validation = static_cast<std::size_t>(std::llround(total * f.validation));
  if (train == 0 || validation == 0 || train + validation >= n) {
    throw std::invalid_argument("split of " + std::to_string(n) +
                                " patterns leaves an empty set");
  }
  return {train, validation, n - train - validation};
}

SplitSet split_chronological(const PatternSet& patterns, const SplitFractions& fractions) {
  if (patterns.scaling) throw std::logic_error("split_chronological expects raw patterns");
  const SplitSizes sizes = split_sizes(patterns.size(), fractions);
  const PatternSet train_raw = patterns.slice(0, sizes.train);

  FeatureScaling scaling;
  for (std::size_t c = 0; c < train_raw.input_count(); ++c) {
    try {
      scaling.inputs.push_back(normalize(train_raw.inputs.column_values(c)).scaler);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("training input column " + std::to_string(c) + ": " + e.what());
    }
  }
  scaling.target = normalize(train_raw.targets.entries()).scaler;

  return {train_raw.with_scaling(scaling),
          patterns.slice(sizes.train, sizes.validation).with_scaling(scaling),
          patterns.slice(sizes.train + sizes.validation, sizes.test).with_scaling(scaling)};
}

DemandSeries synthesize_series(Rng& rng, const SynthParams& p) {
  if (p.days < 30) throw std::invalid_argument("synthesize_series: days must be >= 30");
  if (p.weekly_amp < 0.0 || p.annual_amp < 0.0 || p.noise_sd < 0.0) {
    throw std::invalid_argument("synthesize_series: amplitudes and noise must be nonnegative");
  }
  if (!(p.base_demand > 0.0) || p.growth <= -1.0) {
    throw std::invalid_argument("synthesize_series: nonpositive demand level");
  }
  if (p.weekly_amp + p.annual_amp >= 1.0) {
    throw std::invalid_argument("synthesize_series: seasonal amplitudes drive demand nonpositive");
  }
  if (p.pop_start <= 0) throw std::invalid_argument("synthesize_series: pop_start must be > 0");

  constexpr double two_pi = 2.0 * std::numbers::pi;
  DemandSeries series;
  series.observations.reserve(p.days);
  for (std::size_t day = 0; day < p.days; ++day) {
    const double t = static_cast<double>(day);
    const double level = p.base_demand * std::pow(1.0 + p.growth, t / 365.0);
    const double season =
        1.0 + p.weekly_amp * std::sin(two_pi * t / 7.0) + p.annual_amp * std::sin(two_pi * t / 365.25);
    const double demand = level * season + (p.noise_sd > 0.0 ? rng.normal(0.0, p.noise_sd) : 0.0);
    const Date date = p.start + chr::days{static_cast<int>(day)};
    if (!(demand > 0.0)) {
      throw std::invalid_argument("synthesize_series: nonpositive demand on " +
                                  format_iso_date(date));
    }
    series.observations.push_back({date, demand});
  }

  const int first_year = calendar_year(series.observations.front().date);
  const int last_year = calendar_year(series.observations.back().date);
  for (int year = first_year; year <= last_year; ++year) {
    const double pop = static_cast<double>(p.pop_start) *
                       std::pow(1.0 + p.pop_growth_rate, static_cast<double>(year - first_year));
    series.populations.push_back({year, static_cast<std::int64_t>(std::llround(pop))});
  }
  return series;
}

}  // namespace demandcast
