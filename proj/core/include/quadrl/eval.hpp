#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "quadrl/envs.hpp"

namespace quadrl {

inline constexpr double kSettleSpeed = 0.1;     // m/s
inline constexpr double kMaxTestTime = 12.5;    // s, also the settling-time cap
inline constexpr double kSteadyWindow = 2.0;    // s, trailing window for steady errors
inline constexpr double kUnsettledWindow = 1.0; // s, used when a run never settles

/// Time of the last sample whose speed exceeds `threshold`: from then on the
/// vehicle stays at or below it. 0 if it never exceeds; `cap` if the final
/// sample still does.
double settling_time(const EpisodeRecord& rec, double threshold = kSettleSpeed, double cap = kMaxTestTime);

struct SteadyError {
  double longitudinal = 0.0;  // mean horizontal distance to the target
  double vertical = 0.0;      // mean |z - z_target|
};

/// Mean errors over the post-settling part of the trailing window; runs that
/// never settle use their final second instead.
SteadyError steady_error(const EpisodeRecord& rec, const Vec3& target = Vec3::Zero());

struct RunSummary {
  bool success = false;
  double settling_time = 0.0;
  double longitudinal_error = 0.0;
  double vertical_error = 0.0;
  double completion_time = 0.0;  // episode duration
};

RunSummary summarize_record(const EpisodeRecord& rec, const Vec3& target = Vec3::Zero());

struct Stat {
  int n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1), 0 for n < 2
  double ci_low = 0.0;
  double ci_high = 0.0;  // mean -/+ 1.96 std / sqrt(n)
};

Stat describe(const std::vector<double>& values);

/// Statistics over the successful runs, plus the overall success rate.
struct Aggregate {
  int runs = 0;
  int successes = 0;
  double success_rate = 0.0;
  Stat settling_time;
  Stat longitudinal_error;
  Stat vertical_error;
  Stat completion_time;
};

Aggregate summarize_runs(const std::vector<RunSummary>& runs);

void write_aggregate_csv(std::ostream& out, const Aggregate& agg, const std::string& label);
void write_aggregate_csv_header(std::ostream& out);

// --- expectation maps -------------------------------------------------------

struct LabeledResult {
  double diameter = 0.0;  // in
  double mass = 0.0;      // kg
  bool success = false;
};

/// Grid over the (diameter, mass) test rectangle and the moving window
/// used to average outcomes around each grid point.
struct MapSpec {
  TestRange range = TestRange::for_task(TestTask::kWaypoint);
  int resolution = 100;
  double window_diameter = 1.0;
  double window_mass = 0.417;

  double mass_lo() const;
  double mass_hi() const;
  double diameter_at(int i) const;
  double mass_at(int j) const;
  /// Grid point inside the vehicle envelope of `range`.
  bool admits(double diameter, double mass) const;
};

struct ExpectationMap {
  MapSpec spec;
  /// Row-major [diameter index][mass index].
  std::vector<int> successes;
  std::vector<int> totals;

  int index(int i, int j) const { return i * spec.resolution + j; }
  bool defined(int i, int j) const;
  /// successes / totals; NaN where undefined.
  double expectation(int i, int j) const;
};

ExpectationMap expectation_map(const std::vector<LabeledResult>& results, const MapSpec& spec = {});

/// One row per grid point: diameter, mass, successes, totals, expectation
/// (empty when undefined).
void write_expectation_csv(std::ostream& out, const ExpectationMap& map);

// --- trajectory heatmaps ----------------------------------------------------

enum class Plane { kXY, kXZ };

struct Heatmap {
  Plane plane = Plane::kXY;
  int resolution = 0;
  double half_width = 0.0;
  std::vector<double> counts;  // row-major [u][v]

  double total() const;
  double max() const;
};

/// 2-D histogram of every recorded position projected onto `plane` over the
/// square [-half_width, half_width]^2. Out-of-range samples land in the edge cells.
Heatmap heatmap(const std::vector<EpisodeRecord>& records, Plane plane, int resolution, double half_width);

/// Cell centres with raw counts and counts normalized to a maximum of 1.
void write_heatmap_csv(std::ostream& out, const Heatmap& map);

}  // namespace quadrl
