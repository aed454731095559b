#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "quadrl/eval.hpp"

namespace {

using namespace quadrl;

constexpr double kDt = 0.025;

/// Record with the given world-frame speeds along +x at 40 Hz.
EpisodeRecord speed_record(const std::vector<double>& speeds) {
  EpisodeRecord rec;
  rec.outcome = Outcome::kSuccess;
  for (std::size_t k = 0; k < speeds.size(); ++k) {
    StepRecord s;
    s.time = (k + 1) * kDt;
    s.state.nu = Vec3(speeds[k], 0, 0);
    rec.steps.push_back(s);
  }
  return rec;
}

// --- settling and steady state ----------------------------------------------

TEST(Settling, StationaryRecordSettlesAtZero) {
  EXPECT_EQ(settling_time(speed_record(std::vector<double>(500, 0.0))), 0.0);
}

TEST(Settling, SettlesWhenSpeedDropsForGood) {
  std::vector<double> v;
  for (int k = 1; k <= 500; ++k) v.push_back(k * kDt <= 3.0 + 1e-12 ? 0.2 : 0.05);
  EXPECT_DOUBLE_EQ(settling_time(speed_record(v)), 3.0);
}

TEST(Settling, NeverSettlingHitsTheCap) {
  std::vector<double> v;
  for (int k = 0; k < 500; ++k) v.push_back(k % 2 ? 0.05 : 0.3);
  v.back() = 0.3;
  EXPECT_EQ(settling_time(speed_record(v)), 12.5);
}

TEST(Settling, UsesSpeedMagnitudeInTheWorldFrame) {
  EpisodeRecord rec = speed_record({0.0, 0.0});
  rec.steps[0].state.nu = Vec3(0.06, 0.06, 0.06);  // |v| ~ 0.104
  rec.steps[0].state.attitude = Vec3(0.3, -0.2, 1.0);
  EXPECT_DOUBLE_EQ(settling_time(rec), kDt);
}

TEST(SteadyError, ZeroForARunEndingAtTheTarget) {
  EpisodeRecord rec = speed_record(std::vector<double>(500, 0.0));
  const SteadyError e = steady_error(rec);
  EXPECT_EQ(e.longitudinal, 0.0);
  EXPECT_EQ(e.vertical, 0.0);
}

TEST(SteadyError, AveragesTheFinalTwoSeconds) {
  EpisodeRecord rec = speed_record(std::vector<double>(500, 0.0));
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    // Far away early, then 3-4-5 offsets alternating in sign.
    rec.steps[k].state.position = k < 400 ? Vec3(5, 5, 5) : Vec3(k % 2 ? 0.3 : -0.3, 0.4, k % 2 ? 0.1 : -0.3);
  }
  const SteadyError e = steady_error(rec);
  EXPECT_DOUBLE_EQ(e.longitudinal, 0.5);
  EXPECT_DOUBLE_EQ(e.vertical, 0.2);
  // Relative to a target.
  const SteadyError t = steady_error(rec, Vec3(0, 0.4, 0));
  EXPECT_NEAR(t.longitudinal, 0.3, 1e-12);
}

TEST(SteadyError, SkipsPreSettlingSamplesAndFallsBackWhenUnsettled) {
  std::vector<double> v(500, 0.0);
  for (int k = 0; k < 480; ++k) v[k] = 0.5;  // settles at t = 12.0 s
  EpisodeRecord rec = speed_record(v);
  for (std::size_t k = 0; k < rec.steps.size(); ++k) rec.steps[k].state.position = Vec3(0, 0, k < 480 ? 1.0 : 0.25);
  EXPECT_DOUBLE_EQ(steady_error(rec).vertical, 0.25);

  v.assign(500, 0.5);
  EpisodeRecord moving = speed_record(v);
  for (std::size_t k = 0; k < moving.steps.size(); ++k) moving.steps[k].state.position.z() = k < 460 ? 1.0 : 0.5;
  // Final second only: 40 samples, all at 0.5.
  EXPECT_DOUBLE_EQ(steady_error(moving).vertical, 0.5);
}

// --- aggregation ---------------------------------------------------------------

TEST(Aggregate, IdenticalRunsHaveZeroSpread) {
  RunSummary r{true, 8.0, 0.04, 0.01, 25.0};
  const Aggregate a = summarize_runs(std::vector<RunSummary>(10, r));
  EXPECT_EQ(a.successes, 10);
  EXPECT_EQ(a.settling_time.mean, 8.0);
  EXPECT_EQ(a.settling_time.std, 0.0);
  EXPECT_EQ(a.completion_time.ci_high - a.completion_time.ci_low, 0.0);
}

TEST(Aggregate, TwoRecordHandExample) {
  // Settling 6 and 10: mean 8, sample std sqrt(((-2)^2 + 2^2) / 1) = 2*sqrt(2).
  const Aggregate a = summarize_runs({{true, 6.0, 0.1, 0.0, 20.0}, {true, 10.0, 0.3, 0.2, 30.0}});
  EXPECT_DOUBLE_EQ(a.settling_time.mean, 8.0);
  EXPECT_DOUBLE_EQ(a.settling_time.std, 2.0 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(a.longitudinal_error.mean, 0.2);
  EXPECT_DOUBLE_EQ(a.completion_time.mean, 25.0);
  EXPECT_DOUBLE_EQ(a.completion_time.ci_high, 25.0 + 1.96 * std::sqrt(50.0) / std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(a.completion_time.ci_low, 25.0 - 1.96 * std::sqrt(50.0) / std::sqrt(2.0));
}

TEST(Aggregate, FailuresOnlyCountTowardTheSuccessRate) {
  const Aggregate a = summarize_runs({{true, 6.0, 0, 0, 20.0}, {false, 12.5, 9, 9, 3.0}, {false, 12.5, 9, 9, 1.0}});
  EXPECT_EQ(a.runs, 3);
  EXPECT_EQ(a.successes, 1);
  EXPECT_DOUBLE_EQ(a.success_rate, 1.0 / 3.0);
  EXPECT_EQ(a.completion_time.mean, 20.0);
  EXPECT_EQ(a.completion_time.n, 1);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<RunSummary> runs;
  for (int i = 0; i < 50; ++i) runs.push_back({i % 7 != 0, u(rng), u(rng), u(rng), u(rng)});
  const Aggregate a = summarize_runs(runs);
  std::shuffle(runs.begin(), runs.end(), rng);
  const Aggregate b = summarize_runs(runs);
  EXPECT_NEAR(a.settling_time.mean, b.settling_time.mean, 1e-12);
  EXPECT_NEAR(a.vertical_error.std, b.vertical_error.std, 1e-12);
  EXPECT_EQ(a.successes, b.successes);
}

TEST(Aggregate, CsvHasOneRowPerMetric) {
  std::ostringstream out;
  write_aggregate_csv_header(out);
  write_aggregate_csv(out, summarize_runs({{true, 6.0, 0.1, 0.0, 20.0}}), "pid");
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

// --- expectation maps -----------------------------------------------------------

std::vector<LabeledResult> synthetic(int n, std::uint64_t seed, const MapSpec& spec) {
  std::mt19937_64 rng(seed);
  std::vector<LabeledResult> out;
  for (int i = 0; i < n; ++i) {
    const QuadParams p = spec.range.sample(rng);
    out.push_back({p.prop_diameter, p.mass, std::bernoulli_distribution(0.6)(rng)});
  }
  return out;
}

TEST(ExpectationMap, MatchesBruteForceOracle) {
  for (TestTask task : {TestTask::kWaypoint, TestTask::kPickup}) {
    MapSpec spec;
    spec.range = TestRange::for_task(task);
    const auto results = synthetic(1000, 7, spec);
    const ExpectationMap map = expectation_map(results, spec);
    const double d0 = 6.0, d1 = 12.0, m0 = spec.range.mass_min(6.0), m1 = spec.range.mass_max(12.0);
    for (int i = 0; i < 100; ++i) {
      const double d = d0 + i * (d1 - d0) / 99;
      for (int j = 0; j < 100; ++j) {
        const double m = m0 + j * (m1 - m0) / 99;
        int ok = 0, all = 0;
        for (const LabeledResult& r : results) {
          if (std::abs(r.diameter - d) <= 0.5 && std::abs(r.mass - m) <= 0.2085) {
            ++all;
            ok += r.success;
          }
        }
        const bool inside = m >= spec.range.mass_min(d) && m <= spec.range.mass_max(d);
        ASSERT_EQ(map.totals[static_cast<std::size_t>(i * 100 + j)], all);
        ASSERT_EQ(map.successes[static_cast<std::size_t>(i * 100 + j)], ok);
        ASSERT_EQ(map.defined(i, j), all > 0 && inside);
        if (all > 0 && inside) ASSERT_EQ(map.expectation(i, j), static_cast<double>(ok) / all);
        else ASSERT_TRUE(std::isnan(map.expectation(i, j)));
      }
    }
  }
}

TEST(ExpectationMap, AllSuccessfulGivesOnesEverywhereDefined) {
  const MapSpec spec;
  auto results = synthetic(500, 9, spec);
  for (auto& r : results) r.success = true;
  const ExpectationMap map = expectation_map(results, spec);
  int defined = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      if (!map.defined(i, j)) continue;
      ++defined;
      EXPECT_EQ(map.expectation(i, j), 1.0);
    }
  }
  EXPECT_GT(defined, 1000);
}

TEST(ExpectationMap, SingleResultCoversOneWindow) {
  const MapSpec spec;
  const LabeledResult r{9.0, 1.2, false};
  const ExpectationMap map = expectation_map({r}, spec);
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      if (!map.defined(i, j)) continue;
      EXPECT_EQ(map.expectation(i, j), 0.0);
      EXPECT_LE(std::abs(spec.diameter_at(i) - 9.0), 0.5);
      EXPECT_LE(std::abs(spec.mass_at(j) - 1.2), 0.2085);
    }
  }
  EXPECT_TRUE(map.defined(50, 46));
}

TEST(ExpectationMap, CsvBlanksUndefinedCells) {
  MapSpec spec;
  spec.resolution = 3;
  std::ostringstream out;
  write_expectation_csv(out, expectation_map({{9.0, 0.3, true}}, spec));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "diameter,mass,successes,totals,expectation");
  int rows = 0, blanks = 0;
  while (std::getline(in, line)) {
    ++rows;
    blanks += line.back() == ',';
  }
  EXPECT_EQ(rows, 9);
  EXPECT_EQ(blanks, 9);  // the only nearby grid point (9, 0.3) is outside the envelope
}

// --- heatmaps -----------------------------------------------------------------

EpisodeRecord line_record(const Vec3& from, const Vec3& to, int n) {
  EpisodeRecord rec;
  for (int k = 0; k < n; ++k) {
    StepRecord s;
    s.time = (k + 1) * kDt;
    s.state.position = from + (to - from) * (k + 0.5) / n;
    rec.steps.push_back(s);
  }
  return rec;
}

TEST(Heatmap, StraightLineOccupiesOnlyItsCells) {
  const EpisodeRecord rec = line_record(Vec3(-1, 0.05, 0), Vec3(1, 0.05, 0), 400);
  const Heatmap h = heatmap({rec}, Plane::kXY, 20, 1.2);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double c = h.counts[static_cast<std::size_t>(i * 20 + j)];
      if (j != 10) EXPECT_EQ(c, 0.0);
    }
  }
  EXPECT_EQ(h.total(), 400.0);
}

TEST(Heatmap, MassEqualsSampleCount) {
  std::vector<EpisodeRecord> recs;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  std::size_t n = 0;
  for (int r = 0; r < 5; ++r) {
    recs.push_back(line_record(Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), 100 + r));
    n += recs.back().steps.size();
  }
  EXPECT_EQ(heatmap(recs, Plane::kXZ, 37, 1.2).total(), static_cast<double>(n));
}

TEST(Heatmap, MirroredRecordsGiveMirroredHistogram) {
  const EpisodeRecord a = line_record(Vec3(-0.83, -0.31, -0.47), Vec3(0.71, 0.33, 0.52), 250);
  EpisodeRecord b = a;
  for (StepRecord& s : b.steps) s.state.position.x() = -s.state.position.x();
  const int n = 24;
  const Heatmap ha = heatmap({a}, Plane::kXZ, n, 1.2), hb = heatmap({b}, Plane::kXZ, n, 1.2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      EXPECT_EQ(ha.counts[static_cast<std::size_t>(i * n + j)], hb.counts[static_cast<std::size_t>((n - 1 - i) * n + j)]);
    }
  }
}

TEST(Heatmap, CsvIsNormalizedToUnitPeak) {
  const EpisodeRecord rec = line_record(Vec3(0.1, 0.1, 0), Vec3(0.1, 0.1, 0), 7);
  std::ostringstream out;
  write_heatmap_csv(out, heatmap({rec}, Plane::kXY, 4, 1.0));
  EXPECT_NE(out.str().find(",7,1\n"), std::string::npos);
  EXPECT_EQ(out.str().substr(0, 19), "x,y,count,density\n-");
}

}  // namespace
