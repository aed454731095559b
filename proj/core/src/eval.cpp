#include "quadrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace quadrl {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out << buf;
}

double speed(const StepRecord& s) { return s.state.world_velocity().norm(); }

}  // namespace

double settling_time(const EpisodeRecord& rec, double threshold, double cap) {
  if (rec.steps.empty()) throw std::invalid_argument("settling_time: empty record");
  if (speed(rec.steps.back()) > threshold) return cap;
  for (auto it = rec.steps.rbegin(); it != rec.steps.rend(); ++it) {
    if (speed(*it) > threshold) return std::min(it->time, cap);
  }
  return 0.0;
}

SteadyError steady_error(const EpisodeRecord& rec, const Vec3& target) {
  if (rec.steps.empty()) throw std::invalid_argument("steady_error: empty record");
  const double end = rec.steps.back().time;
  const bool settled = speed(rec.steps.back()) <= kSettleSpeed;
  const double settle = settled ? settling_time(rec, kSettleSpeed, std::numeric_limits<double>::infinity()) : 0.0;
  const double from = settled ? std::max(end - kSteadyWindow, settle) : end - kUnsettledWindow;

  SteadyError e;
  int n = 0;
  for (const StepRecord& s : rec.steps) {
    if (s.time <= from) continue;
    const Vec3 d = s.state.position - target;
    e.longitudinal += d.head<2>().norm();
    e.vertical += std::abs(d.z());
    ++n;
  }
  if (n == 0) {
    // Settled on the very last sample.
    const Vec3 d = rec.steps.back().state.position - target;
    return SteadyError{d.head<2>().norm(), std::abs(d.z())};
  }
  e.longitudinal /= n;
  e.vertical /= n;
  return e;
}

RunSummary summarize_record(const EpisodeRecord& rec, const Vec3& target) {
  RunSummary r;
  r.success = rec.success();
  r.completion_time = rec.duration();
  if (rec.steps.empty()) return r;
  r.settling_time = settling_time(rec);
  const SteadyError e = steady_error(rec, target);
  r.longitudinal_error = e.longitudinal;
  r.vertical_error = e.vertical;
  return r;
}

Stat describe(const std::vector<double>& v) {
  Stat s;
  s.n = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
  }
  const double half = 1.96 * s.std / std::sqrt(static_cast<double>(s.n));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

Aggregate summarize_runs(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw std::invalid_argument("summarize_runs: no runs");
  Aggregate a;
  a.runs = static_cast<int>(runs.size());
  std::vector<double> settle, lon, vert, done;
  for (const RunSummary& r : runs) {
    if (!r.success) continue;
    settle.push_back(r.settling_time);
    lon.push_back(r.longitudinal_error);
    vert.push_back(r.vertical_error);
    done.push_back(r.completion_time);
  }
  a.successes = static_cast<int>(settle.size());
  a.success_rate = static_cast<double>(a.successes) / a.runs;
  a.settling_time = describe(settle);
  a.longitudinal_error = describe(lon);
  a.vertical_error = describe(vert);
  a.completion_time = describe(done);
  return a;
}

void write_aggregate_csv_header(std::ostream& out) {
  out << "label,runs,successes,success_rate,metric,n,mean,std,ci_low,ci_high\n";
}

void write_aggregate_csv(std::ostream& out, const Aggregate& a, const std::string& label) {
  const std::pair<const char*, const Stat*> rows[] = {{"settling_time", &a.settling_time},
                                                     {"longitudinal_error", &a.longitudinal_error},
                                                     {"vertical_error", &a.vertical_error},
                                                     {"completion_time", &a.completion_time}};
  for (const auto& [name, s] : rows) {
    out << label << ',' << a.runs << ',' << a.successes << ',';
    put(out, a.success_rate);
    out << ',' << name << ',' << s->n;
    for (double v : {s->mean, s->std, s->ci_low, s->ci_high}) {
      out << ',';
      put(out, v);
    }
    out << '\n';
  }
}

// --- expectation maps -------------------------------------------------------

double MapSpec::mass_lo() const { return range.mass_min(range.diameter_min); }
double MapSpec::mass_hi() const { return range.mass_max(range.diameter_max); }

double MapSpec::diameter_at(int i) const {
  return range.diameter_min + i * (range.diameter_max - range.diameter_min) / (resolution - 1);
}

double MapSpec::mass_at(int j) const { return mass_lo() + j * (mass_hi() - mass_lo()) / (resolution - 1); }

bool MapSpec::admits(double d, double m) const { return m >= range.mass_min(d) && m <= range.mass_max(d); }

bool ExpectationMap::defined(int i, int j) const {
  return totals[static_cast<std::size_t>(index(i, j))] > 0 && spec.admits(spec.diameter_at(i), spec.mass_at(j));
}

double ExpectationMap::expectation(int i, int j) const {
  if (!defined(i, j)) return std::numeric_limits<double>::quiet_NaN();
  const auto k = static_cast<std::size_t>(index(i, j));
  return static_cast<double>(successes[k]) / totals[k];
}

ExpectationMap expectation_map(const std::vector<LabeledResult>& results, const MapSpec& spec) {
  if (spec.resolution < 2) throw std::invalid_argument("expectation_map: resolution must be >= 2");
  ExpectationMap map;
  map.spec = spec;
  const int n = spec.resolution;
  map.successes.assign(static_cast<std::size_t>(n * n), 0);
  map.totals.assign(static_cast<std::size_t>(n * n), 0);

  // Sorting by diameter lets each grid column scan only nearby results; the
  // window test itself is the plain centred comparison.
  std::vector<LabeledResult> sorted = results;
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledResult& a, const LabeledResult& b) { return a.diameter < b.diameter; });
  const double hd = spec.window_diameter / 2.0, hm = spec.window_mass / 2.0;
  const double slack = 1e-9 * (1.0 + spec.range.diameter_max);
  for (int i = 0; i < n; ++i) {
    const double dc = spec.diameter_at(i);
    auto first = std::lower_bound(sorted.begin(), sorted.end(), dc - hd - slack,
                                  [](const LabeledResult& r, double v) { return r.diameter < v; });
    for (auto it = first; it != sorted.end() && it->diameter <= dc + hd + slack; ++it) {
      if (!(std::abs(it->diameter - dc) <= hd)) continue;
      for (int j = 0; j < n; ++j) {
        if (!(std::abs(it->mass - spec.mass_at(j)) <= hm)) continue;
        const auto k = static_cast<std::size_t>(map.index(i, j));
        ++map.totals[k];
        if (it->success) ++map.successes[k];
      }
    }
  }
  return map;
}

void write_expectation_csv(std::ostream& out, const ExpectationMap& map) {
  out << "diameter,mass,successes,totals,expectation\n";
  const int n = map.spec.resolution;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      put(out, map.spec.diameter_at(i));
      out << ',';
      put(out, map.spec.mass_at(j));
      const auto k = static_cast<std::size_t>(map.index(i, j));
      out << ',' << map.successes[k] << ',' << map.totals[k] << ',';
      if (map.defined(i, j)) put(out, map.expectation(i, j));
      out << '\n';
    }
  }
}

// --- trajectory heatmaps ----------------------------------------------------

double Heatmap::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

double Heatmap::max() const { return counts.empty() ? 0.0 : *std::max_element(counts.begin(), counts.end()); }

Heatmap heatmap(const std::vector<EpisodeRecord>& records, Plane plane, int resolution, double half_width) {
  if (resolution < 1 || !(half_width > 0.0)) throw std::invalid_argument("heatmap: bad grid");
  Heatmap h;
  h.plane = plane;
  h.resolution = resolution;
  h.half_width = half_width;
  h.counts.assign(static_cast<std::size_t>(resolution * resolution), 0.0);
  auto bin = [&](double x) {
    const double u = (x + half_width) / (2.0 * half_width) * resolution;
    return std::clamp(static_cast<int>(std::floor(u)), 0, resolution - 1);
  };
  for (const EpisodeRecord& rec : records) {
    for (const StepRecord& s : rec.steps) {
      const Vec3& p = s.state.position;
      const double v = plane == Plane::kXY ? p.y() : p.z();
      h.counts[static_cast<std::size_t>(bin(p.x()) * resolution + bin(v))] += 1.0;
    }
  }
  return h;
}

void write_heatmap_csv(std::ostream& out, const Heatmap& h) {
  out << (h.plane == Plane::kXY ? "x,y" : "x,z") << ",count,density\n";
  const double peak = h.max();
  const double cell = 2.0 * h.half_width / h.resolution;
  for (int i = 0; i < h.resolution; ++i) {
    for (int j = 0; j < h.resolution; ++j) {
      const double c = h.counts[static_cast<std::size_t>(i * h.resolution + j)];
      put(out, -h.half_width + (i + 0.5) * cell);
      out << ',';
      put(out, -h.half_width + (j + 0.5) * cell);
      out << ',';
      put(out, c);
      out << ',';
      put(out, peak > 0.0 ? c / peak : 0.0);
      out << '\n';
    }
  }
}

}  // namespace quadrl
