#include <doctest.h>

#include <cmath>
#include <numeric>

#include "demandcast/dataio.hpp"
#include "support.hpp"

using namespace demandcast;
namespace chr = std::chrono;

namespace {

const char* kTableTwo =
    "date,demand_ml\n"
    "1997-01-04,1849.95\n"
    "1997-01-05,2137.14\n"
    "1997-01-06,1982.94\n"
    "1997-01-07,2188.65\n"
    "1997-01-08,2254.14\n";

const char* kTableOne =
    "year,population\n"
    "1994,7830904\n"
    "1995,7992219\n"
    "1996,8156857\n"
    "1997,8324886\n"
    "1998,8496376\n";

DemandSeries daily_series(std::size_t days, double start_demand = 100.0) {
  DemandSeries s;
  const Date start = chr::sys_days{chr::year{2001} / chr::March / 1};
  for (std::size_t i = 0; i < days; ++i) {
    s.observations.push_back({start + chr::days{static_cast<int>(i)}, start_demand + static_cast<double>(i)});
  }
  s.populations = {{2001, 1000}, {2002, 1100}, {2003, 1200}, {2004, 1300}, {2005, 1400},
                   {2006, 1500}, {2007, 1600}, {2008, 1700}, {2009, 1800}, {2010, 1900},
                   {2011, 2000}, {2012, 2100}};
  return s;
}

}  // namespace

TEST_CASE("load the demand and population snapshots") {
  testing::TempDir dir("dc-dataio");
  testing::spit(dir.path / "d.csv", kTableTwo);
  testing::spit(dir.path / "p.csv", kTableOne);
  const DemandSeries s = load_csv(dir.path / "d.csv", dir.path / "p.csv");
  REQUIRE(s.size() == 5);
  CHECK(s.observations.front().demand_ml == 1849.95);
  CHECK(format_iso_date(s.observations.front().date) == "1997-01-04");
  CHECK(s.discarded == 0);
  CHECK(s.population_for(1997) == 8324886);

  SUBCASE("lag four over five rows gives a single pattern") {
    const PatternSet p = build_patterns(s, 4, true);
    REQUIRE(p.size() == 1);
    CHECK(p.input_count() == 5);
    CHECK(p.targets(0, 0) == 2254.14);
    CHECK(p.inputs(0, 0) == 1849.95);
    CHECK(p.inputs(0, 3) == 2188.65);
    CHECK(p.inputs(0, 4) == 8324886.0);
  }
}

TEST_CASE("missing demand rows are discarded and counted") {
  testing::TempDir dir("dc-missing");
  std::string demand = "date,demand_ml\n";
  const Date start = chr::sys_days{chr::year{1997} / chr::January / 4};
  for (int i = 0; i < 3474; ++i) {
    demand += format_iso_date(start + chr::days{i}) + ",";
    demand += (i == 1000 ? std::string("") : std::to_string(2000 + i % 97)) + "\n";
  }
  std::string pop = "year,population\n";
  for (int y = 1997; y <= 2006; ++y) pop += std::to_string(y) + ",8000000\n";
  testing::spit(dir.path / "d.csv", demand);
  testing::spit(dir.path / "p.csv", pop);
  const DemandSeries s = load_csv(dir.path / "d.csv", dir.path / "p.csv");
  CHECK(s.size() == 3473);
  CHECK(s.discarded == 1);

  // Windows spanning the dropped day are skipped: 3473 - 4 - 4 gapped windows.
  const PatternSet p = build_patterns(s, 4, true);
  CHECK(p.size() == 3473 - 4 - 4);
}

TEST_CASE("malformed input files") {
  testing::TempDir dir("dc-bad");
  testing::spit(dir.path / "p.csv", kTableOne);
  auto line_of = [&](const std::string& demand) -> std::size_t {
    testing::spit(dir.path / "d.csv", demand);
    try {
      load_csv(dir.path / "d.csv", dir.path / "p.csv");
    } catch (const FormatError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK_THROWS_AS((testing::spit(dir.path / "d.csv", ""), load_csv(dir.path / "d.csv", dir.path / "p.csv")),
                  FormatError);
  CHECK_THROWS_AS((testing::spit(dir.path / "d.csv", "date,demand_ml\n"),
                   load_csv(dir.path / "d.csv", dir.path / "p.csv")),
                  FormatError);
  CHECK(line_of("date,demand_ml\n1997-01-04,1849.95\n1997-13-05,2000\n") == 3);
  CHECK(line_of("date,demand_ml\n1997-01-04,1849.95\n1997-01-05,12x\n") == 3);
  CHECK(line_of("date,demand_ml\n1997-01-04,1849.95\n1997-01-04,1900\n") == 3);

  testing::spit(dir.path / "d.csv", kTableTwo);
  testing::spit(dir.path / "p.csv", "year,population\n1996,1\n1998,2\n");
  CHECK_THROWS_AS(load_csv(dir.path / "d.csv", dir.path / "p.csv"), FormatError);
  CHECK_THROWS_AS(load_csv(dir.path / "nope.csv", dir.path / "p.csv"), FormatError);
}

TEST_CASE("normalize bounds and round trip") {
  const std::vector<double> x{3.0, 7.0, 5.0};
  const Normalized n = normalize(x);
  CHECK(n.values == std::vector<double>{0.0, 1.0, 0.5});
  CHECK(denormalize(std::vector<double>{0.0, 1.0}, n.scaler) == std::vector<double>{3.0, 7.0});
  CHECK_THROWS(normalize(std::vector<double>{2.0, 2.0}));

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> col(20);
    for (double& v : col) v = rng.normal(2500.0, 400.0);
    const Normalized s = normalize(col);
    const auto back = denormalize(s.values, s.scaler);
    for (std::size_t i = 0; i < col.size(); ++i) CHECK(std::abs(back[i] - col[i]) <= 1e-12 * std::abs(col[i]));
  }
}

TEST_CASE("pattern windows") {
  const DemandSeries s = daily_series(6);
  const PatternSet p = build_patterns(s, 4, true);
  CHECK(p.size() == 2);
  CHECK(p.input_count() == 5);
  for (std::size_t lag : {1u, 3u, 7u}) {
    const DemandSeries long_series = daily_series(40);
    const PatternSet q = build_patterns(long_series, lag, false);
    CHECK(q.size() == 40 - lag);
    // The target never appears among its own inputs: inputs are strictly earlier days.
    for (std::size_t r = 0; r < q.size(); ++r) {
      for (std::size_t c = 0; c < q.input_count(); ++c) CHECK(q.inputs(r, c) < q.targets(r, 0));
    }
  }
  CHECK_THROWS(build_patterns(daily_series(4), 4, true));
  CHECK_THROWS(build_patterns(daily_series(10), 0, true));
}

TEST_CASE("split sizes") {
  const SplitSizes d = split_sizes(3470, {});
  CHECK(d.train == 1470);
  CHECK(d.validation == 1005);
  CHECK(d.test == 995);
  const SplitSizes t = split_sizes(9, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(t.train == 3);
  CHECK(t.validation == 3);
  CHECK(t.test == 3);
  CHECK_THROWS(split_sizes(2, {}));
  CHECK_THROWS(split_sizes(100, {0.5, 0.5, 0.0}));
  CHECK_THROWS(split_sizes(100, {0.5, 0.3, 0.3}));
}

TEST_CASE("chronological split partitions patterns and fits scalers on training data") {
  const DemandSeries s = daily_series(3474);
  const PatternSet raw = build_patterns(s, 4, true);
  REQUIRE(raw.size() == 3470);
  const SplitSet split = split_chronological(raw);
  CHECK(split.train.size() + split.validation.size() + split.test.size() == raw.size());
  CHECK(split.train.target_dates.back() < split.validation.target_dates.front());
  CHECK(split.validation.target_dates.back() < split.test.target_dates.front());
  CHECK(split.train.target_dates.front() == raw.target_dates.front());
  CHECK(split.test.target_dates.back() == raw.target_dates.back());

  for (std::size_t c = 0; c < split.train.input_count(); ++c) {
    const auto col = split.train.inputs.column_values(c);
    CHECK(*std::min_element(col.begin(), col.end()) == 0.0);
    CHECK(*std::max_element(col.begin(), col.end()) == 1.0);
  }
  const auto t = split.train.targets.column_values(0);
  CHECK(*std::min_element(t.begin(), t.end()) == 0.0);
  CHECK(*std::max_element(t.begin(), t.end()) == 1.0);
  CHECK(split.validation.scaling->target == split.train.scaling->target);

  const auto actual = split.test.actual_demands();
  for (std::size_t i = 0; i < actual.size(); ++i) {
    CHECK(actual[i] == doctest::Approx(raw.targets(1470 + 1005 + i, 0)).epsilon(1e-12));
  }
}

TEST_CASE("synthetic series") {
  SynthParams flat;
  flat.days = 60;
  flat.noise_sd = 0.0;
  flat.weekly_amp = 0.0;
  flat.annual_amp = 0.0;
  flat.growth = 0.0;
  Rng rng(1);
  const DemandSeries c = synthesize_series(rng, flat);
  for (const auto& o : c.observations) CHECK(o.demand_ml == flat.base_demand);

  SynthParams pop;
  pop.days = 400;
  pop.start = chr::sys_days{chr::year{1994} / chr::June / 1};
  pop.pop_start = 7830904;
  pop.pop_growth_rate = 0.0313;
  Rng r2(2);
  const DemandSeries g = synthesize_series(r2, pop);
  CHECK(g.population_for(1995) == 8076011);

  Rng a(9), b(9);
  const DemandSeries s1 = synthesize_series(a, {});
  const DemandSeries s2 = synthesize_series(b, {});
  CHECK(s1.size() == 3473);
  bool same = s1.size() == s2.size();
  for (std::size_t i = 0; same && i < s1.size(); ++i) same = s1.observations[i].demand_ml == s2.observations[i].demand_ml;
  CHECK(same);
  s1.validate();

  SynthParams bad;
  bad.weekly_amp = 0.6;
  bad.annual_amp = 0.6;
  Rng r3(3);
  CHECK_THROWS(synthesize_series(r3, bad));
  bad = {};
  bad.days = 10;
  CHECK_THROWS(synthesize_series(r3, bad));
}

TEST_CASE("csv writers round trip through the loader") {
  testing::TempDir dir("dc-roundtrip");
  Rng rng(5);
  SynthParams p;
  p.days = 30;
  const DemandSeries s = synthesize_series(rng, p);
  write_demand_csv(dir.path / "d.csv", s);
  write_population_csv(dir.path / "p.csv", s);
  const DemandSeries back = load_csv(dir.path / "d.csv", dir.path / "p.csv");
  REQUIRE(back.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(back.observations[i].date == s.observations[i].date);
    CHECK(std::abs(back.observations[i].demand_ml - s.observations[i].demand_ml) <= 0.005 + 1e-9);
  }
}
