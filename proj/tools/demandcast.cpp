#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>

#include "demandcast/model_io.hpp"
#include "demandcast/pipeline.hpp"

namespace dc = demandcast;

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_signal(int) { g_cancel.store(true); }

struct Flags {
  std::string config;
  std::map<std::string, std::string> values;
};

// Registers a flag whose value lands in `flags.values[key]` when given.
void add_setting(CLI::App* app, Flags& flags, const std::string& name, const std::string& key,
                 const std::string& help) {
  app->add_option_function<std::string>(
      name, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
}

void add_synth_flags(CLI::App* app, Flags& flags) {
  add_setting(app, flags, "--days", "synth.days", "Number of days to generate");
  add_setting(app, flags, "--start", "synth.start", "First date (YYYY-MM-DD)");
  add_setting(app, flags, "--base-demand", "synth.base_demand", "Demand level at the start (ML)");
  add_setting(app, flags, "--growth", "synth.growth", "Yearly demand growth rate");
  add_setting(app, flags, "--weekly-amp", "synth.weekly_amp", "Weekly cycle amplitude (fraction)");
  add_setting(app, flags, "--annual-amp", "synth.annual_amp", "Annual cycle amplitude (fraction)");
  add_setting(app, flags, "--noise-sd", "synth.noise_sd", "Gaussian noise sd (ML)");
  add_setting(app, flags, "--pop-start", "synth.pop_start", "Population in the first year");
  add_setting(app, flags, "--pop-growth", "synth.pop_growth_rate", "Yearly population growth rate");
}

dc::Settings gather(const Flags& flags) {
  dc::Settings base;
  if (!flags.config.empty()) base = dc::read_settings_file(flags.config);
  return dc::merge_settings(std::move(base), flags.values);
}

int cmd_synth(const Flags& flags) {
  dc::Settings settings = gather(flags);
  if (!settings.count("out")) {
    const std::string seed = settings.count("seed") ? settings.at("seed") : "2006";
    settings["out"] = (dc::default_output_root() / ("synth-seed" + seed)).string();
  }
  settings.erase("sweep");
  const dc::RunConfig config = dc::resolve_config(settings, dc::default_output_root());
  if (config.source != dc::DataSource::synthetic) {
    throw std::invalid_argument("synth generates data; csv inputs are not accepted");
  }
  dc::write_synthetic_dataset(config.synth, config.seed, config.out_dir);
  std::cout << "wrote " << (config.out_dir / "demand.csv").string() << " and "
            << (config.out_dir / "population.csv").string() << '\n';
  return 0;
}

int cmd_run(const Flags& flags) {
  const dc::RunConfig config = dc::resolve_config(gather(flags), dc::default_output_root());
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "output directory: " << config.out_dir.string() << '\n';
  const dc::RunOutcome outcome = dc::run_pipeline(config, std::cout, &g_cancel);
  if (!outcome.complete) {
    std::cerr << "run incomplete at stage '" << outcome.failed_stage << "': " << outcome.message
              << '\n';
    return g_cancel.load() ? 130 : 1;
  }
  const std::string tables = (config.out_dir / "tables.txt").string();
  if (std::FILE* f = std::fopen(tables.c_str(), "r")) {
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, f)) std::fwrite(buf, 1, n, stdout);
    std::fclose(f);
  }
  return 0;
}

int cmd_inspect(const std::string& path) {
  std::cout << dc::summarize_model(dc::load_model(path));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Daily water demand forecasting with SVR, MLP and RBF models"};
  app.require_subcommand(1);

  Flags synth_flags;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic demand/population dataset");
  synth->add_option("--config", synth_flags.config, "Settings file (key = value)");
  add_setting(synth, synth_flags, "--seed", "seed", "Random seed");
  add_setting(synth, synth_flags, "--out", "out", "Output directory");
  add_synth_flags(synth, synth_flags);

  Flags run_flags;
  CLI::App* run = app.add_subcommand("run", "Run an experiment sweep end to end");
  run->add_option("--config", run_flags.config, "Settings file (key = value)");
  add_setting(run, run_flags, "--seed", "seed", "Random seed");
  add_setting(run, run_flags, "--out", "out", "Output directory");
  add_setting(run, run_flags, "--demand-csv", "demand_csv", "Daily demand CSV (date,demand_ml)");
  add_setting(run, run_flags, "--population-csv", "population_csv",
              "Yearly population CSV (year,population)");
  add_setting(run, run_flags, "--sweep", "sweep", "svr, ann, tournament or input-select");
  add_setting(run, run_flags, "--tau", "tau", "Tolerance: fixed:<ml> or fraction:<f>");
  add_setting(run, run_flags, "--splits", "splits", "Train,validation,test fractions");
  add_setting(run, run_flags, "--inputs", "inputs", "Model input count (lags + population)");
  add_setting(run, run_flags, "--candidates", "candidates", "Input counts for input-select");
  add_setting(run, run_flags, "--threads", "threads", "Worker threads");
  add_setting(run, run_flags, "--svr-c", "svr.c", "SVR box constraint C");
  add_setting(run, run_flags, "--svr-epsilon", "svr.epsilon", "SVR insensitive-zone width");
  add_synth_flags(run, run_flags);

  std::string model_path;
  CLI::App* inspect = app.add_subcommand("inspect", "Summarise a saved model");
  inspect->add_option("model", model_path, "Model file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_flags);
    if (run->parsed()) return cmd_run(run_flags);
    return cmd_inspect(model_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
