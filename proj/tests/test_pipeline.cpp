#include <doctest.h>

#include <sstream>

#include "demandcast/pipeline.hpp"
#include "support.hpp"

using namespace demandcast;
namespace fs = std::filesystem;

TEST_CASE("tolerance settings") {
  const auto f = parse_tolerance_setting("fixed:500");
  CHECK(f.rule == ToleranceRule::fixed);
  CHECK(f.value == 500.0);
  const auto g = parse_tolerance_setting("fraction:0.19");
  CHECK(g.rule == ToleranceRule::fraction_of_mean);
  CHECK(format_tolerance_setting(g) == "fraction:0.19");
  CHECK_THROWS(parse_tolerance_setting("500"));
  CHECK_THROWS(parse_tolerance_setting("fraction:2"));
  CHECK_THROWS(parse_tolerance_setting("fixed:-1"));
  CHECK_THROWS(parse_tolerance_setting("median:3"));
}

TEST_CASE("config resolution") {
  const RunConfig d = resolve_config({}, "/tmp/root");
  CHECK(d.source == DataSource::synthetic);
  CHECK(d.seed == 2006);
  CHECK(d.sweep == SweepKind::tournament);
  CHECK(d.out_dir == fs::path("/tmp/root/tournament-seed2006"));
  CHECK(effective_tolerance_setting(d).rule == ToleranceRule::fraction_of_mean);

  const RunConfig csv = resolve_config({{"demand_csv", "d.csv"}, {"population_csv", "p.csv"}, {"sweep", "svr"}}, "/tmp/root");
  CHECK(csv.source == DataSource::csv);
  CHECK(csv.demand_csv.is_absolute());
  CHECK(effective_tolerance_setting(csv).rule == ToleranceRule::fixed);
  CHECK(effective_tolerance_setting(csv).value == 500.0);

  CHECK_THROWS(resolve_config({{"demand_csv", "d.csv"}}, "/tmp"));
  CHECK_THROWS(resolve_config({{"demand_csv", "d.csv"}, {"population_csv", "p"}, {"synth.days", "40"}}, "/tmp"));
  CHECK_THROWS(resolve_config({{"colour", "blue"}}, "/tmp"));
  CHECK_THROWS(resolve_config({{"sweep", "everything"}}, "/tmp"));
  CHECK_THROWS(resolve_config({{"splits", "0.5,0.5"}}, "/tmp"));
  CHECK_THROWS(resolve_config({{"seed", "-3"}}, "/tmp"));

  const Settings merged = merge_settings({{"synth.days", "40"}, {"seed", "1"}},
                                         {{"demand_csv", "a"}, {"population_csv", "b"}});
  CHECK(merged.count("synth.days") == 0);
  CHECK(merged.at("seed") == "1");
}

TEST_CASE("resolved config snapshot replays to the same config") {
  testing::TempDir dir("dc-config");
  Settings s{{"synth.days", "500"}, {"seed", "77"}, {"tau", "fixed:450"}, {"splits", "0.5,0.25,0.25"},
             {"svr.c", "3"}, {"out", (dir.path / "run").string()}};
  const RunConfig a = resolve_config(s, "/unused");
  testing::spit(dir.path / "snap.conf", format_config(a));
  const RunConfig b = resolve_config(read_settings_file(dir.path / "snap.conf"), "/elsewhere");
  CHECK(format_config(b) == format_config(a));
  CHECK(b.synth.days == 500);
  CHECK(b.splits.train == 0.5);
  CHECK(*b.svr_c == 3.0);
}

TEST_CASE("pipeline runs an svr sweep and reports a missing file by stage") {
  testing::TempDir dir("dc-pipeline");
  RunConfig config = resolve_config({{"synth.days", "1000"}, {"sweep", "svr"}, {"seed", "3"},
                                     {"out", (dir.path / "svr").string()}}, "/unused");
  std::ostringstream log;
  const RunOutcome ok = run_pipeline(config, log);
  CHECK(ok.complete);
  for (const char* f : {"config.resolved", "svr_report.csv", "tables.txt", "timings.csv", "svg.model",
                        "tolerance.csv", "scalers.csv", "data/demand.csv", "data/synth.provenance"}) {
    CHECK(fs::exists(config.out_dir / f));
  }
  CHECK(testing::slurp(config.out_dir / "STATUS") == "complete\n");

  RunConfig bad = resolve_config({{"demand_csv", (dir.path / "none.csv").string()},
                                  {"population_csv", (dir.path / "none2.csv").string()},
                                  {"out", (dir.path / "bad").string()}}, "/unused");
  const RunOutcome failed = run_pipeline(bad, log);
  CHECK_FALSE(failed.complete);
  CHECK(failed.failed_stage == "data manipulation");

  std::atomic<bool> cancel{true};
  config.out_dir = dir.path / "cancelled";
  const RunOutcome partial = run_pipeline(config, log, &cancel);
  CHECK_FALSE(partial.complete);
  CHECK(testing::slurp(config.out_dir / "STATUS").rfind("incomplete", 0) == 0);
}

TEST_CASE("synthetic dataset writer") {
  testing::TempDir dir("dc-synth");
  SynthParams p;
  p.days = 30;
  write_synthetic_dataset(p, 5, dir.path / "a");
  write_synthetic_dataset(p, 5, dir.path / "b");
  const std::string demand = testing::slurp(dir.path / "a" / "demand.csv");
  CHECK(demand == testing::slurp(dir.path / "b" / "demand.csv"));
  CHECK(std::count(demand.begin(), demand.end(), '\n') == 31);
  const std::string prov = testing::slurp(dir.path / "a" / "synth.provenance");
  CHECK(prov.find("seed = 5") != std::string::npos);
  CHECK(prov.find("synth.days = 30") != std::string::npos);
}
