#include "demandcast/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "demandcast/model_io.hpp"
#include "demandcast/report.hpp"

namespace demandcast {

namespace fs = std::filesystem;

std::string_view to_string(SweepKind s) {
  switch (s) {
    case SweepKind::svr: return "svr";
    case SweepKind::ann: return "ann";
    case SweepKind::tournament: return "tournament";
    case SweepKind::input_select: return "input-select";
  }
  return "?";
}

SweepKind parse_sweep(std::string_view text) {
  for (auto s : {SweepKind::svr, SweepKind::ann, SweepKind::tournament, SweepKind::input_select}) {
    if (text == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown sweep '" + std::string(text) +
                              "' (expected svr, ann, tournament or input-select)");
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

double to_real(const std::string& key, std::string_view text) {
  double v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument(key + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::uint64_t to_count(const std::string& key, std::string_view text) {
  std::uint64_t v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument(key + ": '" + std::string(text) + "' is not a nonnegative integer");
  }
  return v;
}

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    parts.push_back(trim(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

bool is_synth_key(const std::string& key) { return key.rfind("synth.", 0) == 0; }
bool is_csv_key(const std::string& key) { return key == "demand_csv" || key == "population_csv"; }

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "source", "demand_csv", "population_csv", "synth.days", "synth.start",
      "synth.base_demand", "synth.growth", "synth.weekly_amp", "synth.annual_amp",
      "synth.noise_sd", "synth.pop_start", "synth.pop_growth_rate", "splits", "tau", "sweep",
      "seed", "out", "inputs", "candidates", "threads", "svr.c", "svr.epsilon"};
  return keys;
}

std::string format_synth(const SynthParams& p) {
  std::ostringstream out;
  out << "synth.days = " << p.days << '\n'
      << "synth.start = " << format_iso_date(p.start) << '\n'
      << "synth.base_demand = " << num(p.base_demand) << '\n'
      << "synth.growth = " << num(p.growth) << '\n'
      << "synth.weekly_amp = " << num(p.weekly_amp) << '\n'
      << "synth.annual_amp = " << num(p.annual_amp) << '\n'
      << "synth.noise_sd = " << num(p.noise_sd) << '\n'
      << "synth.pop_start = " << p.pop_start << '\n'
      << "synth.pop_growth_rate = " << num(p.pop_growth_rate) << '\n';
  return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

ToleranceSetting parse_tolerance_setting(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("tau: expected fixed:<ml> or fraction:<f>, got '" +
                                std::string(text) + "'");
  }
  const std::string kind = trim(text.substr(0, colon));
  const double value = to_real("tau", trim(text.substr(colon + 1)));
  if (kind == "fixed") {
    if (!(value > 0.0)) throw std::invalid_argument("tau: fixed tolerance must be > 0");
    return {ToleranceRule::fixed, value};
  }
  if (kind == "fraction") {
    if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("tau: fraction must lie in (0, 1)");
    return {ToleranceRule::fraction_of_mean, value};
  }
  throw std::invalid_argument("tau: unknown rule '" + kind + "'");
}

std::string format_tolerance_setting(const ToleranceSetting& tau) {
  return (tau.rule == ToleranceRule::fixed ? "fixed:" : "fraction:") + num(tau.value);
}

Settings read_settings_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  Settings settings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    settings[trim(std::string_view(line).substr(0, eq))] =
        trim(std::string_view(line).substr(eq + 1));
  }
  return settings;
}

Settings merge_settings(Settings base, const Settings& overrides) {
  const bool new_csv = std::any_of(overrides.begin(), overrides.end(),
                                   [](const auto& kv) { return is_csv_key(kv.first); });
  const bool new_synth = std::any_of(overrides.begin(), overrides.end(),
                                     [](const auto& kv) { return is_synth_key(kv.first); });
  if (new_csv || new_synth || overrides.count("source")) {
    for (auto it = base.begin(); it != base.end();) {
      const bool drop = it->first == "source" || (new_csv && is_synth_key(it->first)) ||
                        (new_synth && is_csv_key(it->first));
      it = drop ? base.erase(it) : std::next(it);
    }
  }
  for (const auto& [key, value] : overrides) base[key] = value;
  return base;
}

RunConfig resolve_config(const Settings& settings, const fs::path& default_out_root) {
  for (const auto& [key, value] : settings) {
    if (!known_keys().count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = settings.find(key);
    if (it == settings.end()) return std::nullopt;
    return it->second;
  };

  RunConfig config;
  const bool has_csv = std::any_of(settings.begin(), settings.end(),
                                   [](const auto& kv) { return is_csv_key(kv.first); });
  const bool has_synth = std::any_of(settings.begin(), settings.end(),
                                     [](const auto& kv) { return is_synth_key(kv.first); });
  if (auto source = get("source")) {
    if (*source == "csv") config.source = DataSource::csv;
    else if (*source == "synthetic") config.source = DataSource::synthetic;
    else throw std::invalid_argument("source: expected csv or synthetic");
  } else {
    config.source = has_csv ? DataSource::csv : DataSource::synthetic;
  }
  if (config.source == DataSource::csv) {
    if (has_synth) throw std::invalid_argument("exactly one data source: csv paths and synth.* both given");
    const auto demand = get("demand_csv");
    const auto population = get("population_csv");
    if (!demand || !population) {
      throw std::invalid_argument("csv source needs both demand_csv and population_csv");
    }
    config.demand_csv = fs::absolute(*demand).lexically_normal();
    config.population_csv = fs::absolute(*population).lexically_normal();
  } else {
    if (has_csv) throw std::invalid_argument("exactly one data source: synthetic source given csv paths");
    SynthParams& p = config.synth;
    if (auto v = get("synth.days")) p.days = to_count("synth.days", *v);
    if (auto v = get("synth.start")) {
      const auto date = parse_iso_date(*v);
      if (!date) throw std::invalid_argument("synth.start: expected YYYY-MM-DD");
      p.start = *date;
    }
    if (auto v = get("synth.base_demand")) p.base_demand = to_real("synth.base_demand", *v);
    if (auto v = get("synth.growth")) p.growth = to_real("synth.growth", *v);
    if (auto v = get("synth.weekly_amp")) p.weekly_amp = to_real("synth.weekly_amp", *v);
    if (auto v = get("synth.annual_amp")) p.annual_amp = to_real("synth.annual_amp", *v);
    if (auto v = get("synth.noise_sd")) p.noise_sd = to_real("synth.noise_sd", *v);
    if (auto v = get("synth.pop_start")) {
      p.pop_start = static_cast<std::int64_t>(to_count("synth.pop_start", *v));
    }
    if (auto v = get("synth.pop_growth_rate")) {
      p.pop_growth_rate = to_real("synth.pop_growth_rate", *v);
    }
  }

  if (auto v = get("splits")) {
    const auto parts = split_commas(*v);
    if (parts.size() != 3) throw std::invalid_argument("splits: expected three fractions");
    config.splits = {to_real("splits", parts[0]), to_real("splits", parts[1]),
                     to_real("splits", parts[2])};
    (void)split_sizes(1000000, config.splits);  // validates the fractions
  }
  if (auto v = get("tau")) config.tau = parse_tolerance_setting(*v);
  if (auto v = get("sweep")) config.sweep = parse_sweep(*v);
  if (auto v = get("seed")) config.seed = to_count("seed", *v);
  if (auto v = get("inputs")) {
    config.inputs = to_count("inputs", *v);
    if (config.inputs < 2) throw std::invalid_argument("inputs must be >= 2");
  }
  if (auto v = get("candidates")) {
    config.candidates.clear();
    for (const auto& part : split_commas(*v)) {
      config.candidates.push_back(to_count("candidates", part));
      if (config.candidates.back() < 2) throw std::invalid_argument("candidates must be >= 2");
    }
  }
  if (auto v = get("threads")) config.threads = std::max<std::uint64_t>(1, to_count("threads", *v));
  if (auto v = get("svr.c")) config.svr_c = to_real("svr.c", *v);
  if (auto v = get("svr.epsilon")) config.svr_epsilon = to_real("svr.epsilon", *v);

  if (auto v = get("out")) {
    config.out_dir = fs::absolute(*v).lexically_normal();
  } else {
    config.out_dir = fs::absolute(default_out_root / (std::string(to_string(config.sweep)) +
                                                      "-seed" + std::to_string(config.seed)))
                         .lexically_normal();
  }
  return config;
}

ToleranceSetting effective_tolerance_setting(const RunConfig& config) {
  if (config.tau) return *config.tau;
  if (config.source == DataSource::csv) return {ToleranceRule::fixed, 500.0};
  return {ToleranceRule::fraction_of_mean, kDefaultToleranceFraction};
}

std::string format_config(const RunConfig& config) {
  std::ostringstream out;
  out << "# demandcast resolved run configuration\n";
  if (config.source == DataSource::csv) {
    out << "source = csv\n"
        << "demand_csv = " << config.demand_csv.string() << '\n'
        << "population_csv = " << config.population_csv.string() << '\n';
  } else {
    out << "source = synthetic\n" << format_synth(config.synth);
  }
  out << "splits = " << num(config.splits.train) << ',' << num(config.splits.validation) << ','
      << num(config.splits.test) << '\n'
      << "tau = " << format_tolerance_setting(effective_tolerance_setting(config)) << '\n'
      << "sweep = " << to_string(config.sweep) << '\n'
      << "seed = " << config.seed << '\n'
      << "out = " << config.out_dir.string() << '\n'
      << "inputs = " << config.inputs << '\n'
      << "candidates = ";
  for (std::size_t i = 0; i < config.candidates.size(); ++i) {
    out << (i ? "," : "") << config.candidates[i];
  }
  out << '\n' << "threads = " << config.threads << '\n';
  if (config.svr_c) out << "svr.c = " << num(*config.svr_c) << '\n';
  if (config.svr_epsilon) out << "svr.epsilon = " << num(*config.svr_epsilon) << '\n';
  return out.str();
}

fs::path default_output_root() {
  if (const char* root = std::getenv("DEMANDCAST_OUT_ROOT"); root && *root) return root;
  return "runs";
}

void write_synthetic_dataset(const SynthParams& params, std::uint64_t seed,
                             const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Rng rng(seed);
  const DemandSeries series = synthesize_series(rng, params);
  write_demand_csv(out_dir / "demand.csv", series);
  write_population_csv(out_dir / "population.csv", series);
  write_text(out_dir / "synth.provenance",
             "# demandcast synthetic dataset\nseed = " + std::to_string(seed) + "\n" +
                 format_synth(params));
}

namespace {

template <typename F>
auto stage(const std::string& name, std::ostream& log, F&& body) {
  log << "[" << name << "]\n";
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_scalers(const fs::path& path, const SplitSet& split) {
  std::ostringstream out;
  out << "# column,x_min,x_max (fitted on the training split)\n";
  const auto& s = *split.train.scaling;
  for (std::size_t c = 0; c < s.inputs.size(); ++c) {
    const bool pop = split.train.includes_population && c + 1 == s.inputs.size();
    out << (pop ? "population" : "lag" + std::to_string(split.train.lag_count - c)) << ','
        << num(s.inputs[c].x_min) << ',' << num(s.inputs[c].x_max) << '\n';
  }
  out << "target," << num(s.target.x_min) << ',' << num(s.target.x_max) << '\n';
  write_text(path, out.str());
}

std::string tolerance_text(const Tolerance& tol, const DemandSeries& series) {
  std::ostringstream out;
  out << "rule," << (tol.rule == ToleranceRule::fixed ? "fixed" : "fraction_of_mean") << '\n'
      << "tau_ml," << num(tol.tau) << '\n'
      << "fraction_of_mean_tau_ml," << num(derive_tolerance(series).tau) << '\n'
      << "reference_fixed_tau_ml," << num(500.0) << '\n';
  return out.str();
}

std::string plot_data(const PatternSet& test, const TrainedModel& ang, const TrainedModel& svg) {
  const auto actual = test.actual_demands();
  const auto ang_pred = test.to_demand(predict(ang, test.inputs).entries());
  const auto svg_pred = test.to_demand(predict(svg, test.inputs).entries());
  std::ostringstream out;
  out << "date,actual_ml,ang_prediction_ml,svg_prediction_ml\n";
  for (std::size_t i = 0; i < actual.size(); ++i) {
    out << format_iso_date(test.target_dates[i]) << ',' << num(actual[i]) << ','
        << num(ang_pred[i]) << ',' << num(svg_pred[i]) << '\n';
  }
  return out.str();
}

std::string tournament_csv(const TournamentResult& t) {
  std::ostringstream out;
  out << "stage,role,label,error_pct,accuracy_pct,training_error\n";
  auto row = [&](const char* stage_name, const char* role, const EvalReport& r) {
    out << stage_name << ',' << role << ',' << r.model_label << ',' << num(r.error_pct) << ','
        << num(r.accuracy_pct) << ',' << num(r.training_error) << '\n';
  };
  row("validation", "SVG", t.svg_validation);
  row("validation", "ANG", t.ang_validation);
  row("test", "SVG", t.svg_test);
  row("test", "ANG", t.ang_test);
  const EvalReport& og = t.og == Genius::svg ? t.svg_test : t.ang_test;
  row("test", t.og == Genius::svg ? "OG=SVG" : "OG=ANG", og);
  return out.str();
}

std::string report_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  write_report_csv(out, reports);
  return out.str();
}

std::string timings_csv(std::span<const EvalReport> svr, std::span<const EvalReport> ann) {
  std::ostringstream out;
  write_timings_csv(out, svr);
  std::ostringstream rest;
  write_timings_csv(rest, ann);
  const std::string tail = rest.str();
  out << tail.substr(tail.find('\n') + 1);
  return out.str();
}

}  // namespace

RunOutcome run_pipeline(const RunConfig& config, std::ostream& log,
                        const std::atomic<bool>* cancel) {
  RunOutcome outcome;
  const fs::path dir = config.out_dir;
  std::ostringstream tables;
  auto cancelled = [&] { return cancel && cancel->load(); };

  try {
    stage("run setup", log, [&] {
      fs::create_directories(dir);
      fs::remove(dir / "STATUS");
      write_text(dir / "config.resolved", format_config(config));
    });

    const DemandSeries series = stage("data manipulation", log, [&] {
      if (config.source == DataSource::synthetic) {
        write_synthetic_dataset(config.synth, config.seed, dir / "data");
        return load_csv(dir / "data" / "demand.csv", dir / "data" / "population.csv");
      }
      return load_csv(config.demand_csv, config.population_csv);
    });
    log << "  " << series.size() << " observations, " << series.discarded << " discarded\n";

    const ToleranceSetting tau_setting = effective_tolerance_setting(config);
    const Tolerance tol = tau_setting.rule == ToleranceRule::fixed
                              ? fixed_tolerance(tau_setting.value)
                              : derive_tolerance(series, tau_setting.value);
    write_text(dir / "tolerance.csv", tolerance_text(tol, series));

    ExperimentOptions options;
    options.seed = config.seed;
    options.threads = config.threads;
    options.cancel = cancel;
    options.svr_c = config.svr_c;
    options.svr_epsilon = config.svr_epsilon;

    if (config.sweep == SweepKind::input_select) {
      const InputSelection selection = stage("model initialization", log, [&] {
        return select_input_count(config.candidates, series, config.splits, config.seed);
      });
      std::ostringstream csv;
      csv << "inputs,training_error,status\n";
      for (const auto& row : selection.table) {
        csv << row.inputs << ',' << (row.failure ? "" : num(row.training_error)) << ','
            << (row.failure ? "failed" : "ok") << '\n';
      }
      write_text(dir / "input_selection.csv", csv.str());
      write_input_selection_table(tables, selection);
      write_text(dir / "tables.txt", tables.str());
      write_text(dir / "STATUS", "complete\n");
      outcome.complete = true;
      return outcome;
    }

    const SplitSet split = stage("data manipulation", log, [&] {
      return split_chronological(build_patterns(series, config.inputs - 1, true), config.splits);
    });
    write_scalers(dir / "scalers.csv", split);
    log << "  patterns: " << split.train.size() << " train / " << split.validation.size()
        << " validation / " << split.test.size() << " test\n";

    const auto sweep = default_kernel_sweep();
    auto write_svr = [&](const ExperimentResult& svr) {
      write_text(dir / "svr_report.csv", report_csv(svr.reports));
      tables << "SVR experiment (validation set)\n";
      write_svr_table(tables, svr.reports, sweep);
      tables << '\n';
    };
    auto write_ann = [&](const ExperimentResult& ann) {
      write_text(dir / "ann_report.csv", report_csv(ann.reports));
      const std::span<const EvalReport> all(ann.reports);
      tables << "MLP experiment (validation set)\n";
      write_ann_table(tables, "MLP", all.first(12));
      tables << "\nRBF experiment (validation set)\n";
      write_ann_table(tables, "RBF", all.subspan(12));
      tables << '\n';
    };
    auto finish_partial = [&](const std::string& stage_name) {
      write_text(dir / "tables.txt", tables.str());
      write_text(dir / "STATUS", "incomplete: " + stage_name + "\n");
      outcome.failed_stage = stage_name;
      outcome.message = "interrupted";
      return outcome;
    };

    if (config.sweep == SweepKind::svr) {
      const ExperimentResult svr =
          stage("svr experiment", log, [&] { return run_svr_experiment(split, tol, options); });
      write_svr(svr);
      write_text(dir / "timings.csv", timings_csv(svr.reports, {}));
      if (svr.cancelled || cancelled()) return finish_partial("svr experiment");
      stage("performance analysis", log, [&] {
        const std::size_t best = pick_genius_index(svr.reports);
        save_model(dir / "svg.model", *svr.models[best]);
        tables << "SVG: " << svr.reports[best].model_label << '\n';
      });
    } else if (config.sweep == SweepKind::ann) {
      const ExperimentResult ann =
          stage("ann experiment", log, [&] { return run_ann_experiment(split, tol, options); });
      write_ann(ann);
      write_text(dir / "timings.csv", timings_csv({}, ann.reports));
      if (ann.cancelled || cancelled()) return finish_partial("ann experiment");
      stage("performance analysis", log, [&] {
        const std::size_t best = pick_genius_index(ann.reports);
        save_model(dir / "ang.model", *ann.models[best]);
        tables << "ANG: " << ann.reports[best].model_label << '\n';
      });
    } else {
      const ExperimentResult svr =
          stage("svr experiment", log, [&] { return run_svr_experiment(split, tol, options); });
      write_svr(svr);
      if (svr.cancelled || cancelled()) return finish_partial("svr experiment");
      const ExperimentResult ann =
          stage("ann experiment", log, [&] { return run_ann_experiment(split, tol, options); });
      write_ann(ann);
      write_text(dir / "timings.csv", timings_csv(svr.reports, ann.reports));
      if (ann.cancelled || cancelled()) return finish_partial("ann experiment");

      TournamentResult t = stage("performance analysis", log, [&] {
        TournamentResult r;
        r.svr = svr;
        r.ann = ann;
        r.svg_index = pick_genius_index(svr.reports);
        r.ang_index = pick_genius_index(ann.reports);
        r.svg_validation = svr.reports[r.svg_index];
        r.ang_validation = ann.reports[r.ang_index];
        r.svg_model = *svr.models[r.svg_index];
        r.ang_model = *ann.models[r.ang_index];
        return r;
      });
      stage("overall genius", log, [&] {
        t.svg_test = evaluate(t.svg_model, split.test, tol, t.svg_validation.model_label);
        t.svg_test.training_error = t.svg_validation.training_error;
        t.svg_test.elapsed_seconds = t.svg_validation.elapsed_seconds;
        t.ang_test = evaluate(t.ang_model, split.test, tol, t.ang_validation.model_label);
        t.ang_test.training_error = t.ang_validation.training_error;
        t.ang_test.elapsed_seconds = t.ang_validation.elapsed_seconds;
        t.og = decide_overall_genius(t.svg_test, t.ang_test);
      });
      stage("report writing", log, [&] {
        save_model(dir / "svg.model", t.svg_model);
        save_model(dir / "ang.model", t.ang_model);
        write_text(dir / "tournament.csv", tournament_csv(t));
        write_text(dir / "plot_data.csv", plot_data(split.test, t.ang_model, t.svg_model));
        tables << "Overall Genius (test set)\n";
        write_genius_summary(tables, t);
      });
    }

    write_text(dir / "tables.txt", tables.str());
    write_text(dir / "STATUS", "complete\n");
    outcome.complete = true;
  } catch (const StageError& e) {
    outcome.failed_stage = e.stage();
    outcome.message = e.what();
    std::error_code ec;
    if (fs::exists(dir, ec)) {
      std::ofstream status(dir / "STATUS");
      status << "failed: " << e.what() << '\n';
    }
  }
  return outcome;
}

}  // namespace demandcast
