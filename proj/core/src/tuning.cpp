#include "quadrl/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "quadrl/cmaes.hpp"
#include "quadrl/controllers.hpp"
#include "quadrl/parallel.hpp"

namespace quadrl {

namespace {

constexpr int kGainCount = 12;
constexpr int kWithTrajectory = 14;

/// Lower bounds in reduced-vector order. Proportional terms are kept away
/// from zero so the search cannot switch a loop off.
Eigen::VectorXd gain_lower(double kp_yaw_min) {
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(kGainCount);
  lo[0] = 0.1;  // kp xy
  lo[3] = 0.5;  // kp z
  lo[6] = 1.0;  // kp roll/pitch
  lo[9] = kp_yaw_min;
  return lo;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end(), [](double a, double b) {
    // NaN sorts last.
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void SearchSpec::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size() || x0.size() != lower.size()) {
    throw std::invalid_argument("SearchSpec: lower, upper and x0 must share a non-zero size");
  }
  if (!((upper - lower).array() > 0.0).all()) throw std::invalid_argument("SearchSpec: need lower < upper");
  if (!x0.allFinite() || !(sigma0 > 0.0)) throw std::invalid_argument("SearchSpec: bad x0 or sigma0");
  if (iterations < 0) throw std::invalid_argument("SearchSpec: iterations must be >= 0");
}

SearchSpec SearchSpec::pose() {
  SearchSpec s;
  s.lower.resize(kWithTrajectory);
  s.upper.resize(kWithTrajectory);
  s.lower << gain_lower(0.5), 1.0, 0.0;
  s.upper << Eigen::VectorXd::Constant(kGainCount, 10.0), 10.0, 0.5;
  s.x0 = unconstrain(gains_to_vector(reference_pose_gains(), true), s);
  return s;
}

SearchSpec SearchSpec::velocity() {
  SearchSpec s;
  s.lower = gain_lower(5.0);
  s.upper = Eigen::VectorXd::Constant(kGainCount, 10.0);
  s.x0 = unconstrain(Eigen::VectorXd::Constant(kGainCount, 5.0), s);
  return s;
}

SearchSpec SearchSpec::for_stack(PidStack stack) { return stack == PidStack::kPose ? pose() : velocity(); }

Eigen::VectorXd constrain(const Eigen::VectorXd& raw, const SearchSpec& spec) {
  if (raw.size() != spec.lower.size()) throw std::invalid_argument("constrain: dimension mismatch");
  const Eigen::ArrayXd s = (raw.array().sin() + 1.0) * 0.5;
  return (spec.lower.array() + (spec.upper - spec.lower).array() * s).matrix();
}

Eigen::VectorXd unconstrain(const Eigen::VectorXd& bounded, const SearchSpec& spec) {
  if (bounded.size() != spec.lower.size()) throw std::invalid_argument("unconstrain: dimension mismatch");
  Eigen::VectorXd raw(bounded.size());
  for (Eigen::Index i = 0; i < bounded.size(); ++i) {
    const double u = 2.0 * (bounded[i] - spec.lower[i]) / (spec.upper[i] - spec.lower[i]) - 1.0;
    raw[i] = std::asin(std::clamp(u, -1.0, 1.0));
  }
  return raw;
}

double soft_clip(double e, double knee) { return e <= knee ? e : knee + std::sqrt(e - knee); }

PidGainSet gains_from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kGainCount && v.size() != kWithTrajectory) {
    throw std::invalid_argument("gains_from_vector: expected 12 or 14 entries");
  }
  PidGainSet g;
  PidGains* loops[] = {&g.xy, &g.z, &g.roll_pitch, &g.yaw};
  for (int i = 0; i < 4; ++i) *loops[i] = PidGains{v[3 * i], v[3 * i + 1], v[3 * i + 2]};
  if (v.size() == kWithTrajectory) {
    g.traj_duration = v[12];
    g.traj_rise = v[13];
  }
  return g;
}

Eigen::VectorXd gains_to_vector(const PidGainSet& g, bool with_trajectory) {
  Eigen::VectorXd v(with_trajectory ? kWithTrajectory : kGainCount);
  const PidGains* loops[] = {&g.xy, &g.z, &g.roll_pitch, &g.yaw};
  for (int i = 0; i < 4; ++i) {
    v[3 * i] = loops[i]->kp;
    v[3 * i + 1] = loops[i]->ki;
    v[3 * i + 2] = loops[i]->kd;
  }
  if (with_trajectory) {
    v[12] = g.traj_duration;
    v[13] = g.traj_rise;
  }
  return v;
}

FullGains expand_gains(const PidGainSet& g) {
  FullGains f;
  f.x = f.y = g.xy;
  f.z = g.z;
  f.roll = f.pitch = g.roll_pitch;
  f.yaw = g.yaw;
  return f;
}

PidGainSet collapse_gains(const FullGains& f, double traj_duration, double traj_rise) {
  if (!(f.x == f.y) || !(f.roll == f.pitch)) {
    throw std::invalid_argument("collapse_gains: x/y or roll/pitch loops differ");
  }
  PidGainSet g;
  g.xy = f.x;
  g.z = f.z;
  g.roll_pitch = f.roll;
  g.yaw = f.yaw;
  g.traj_duration = traj_duration;
  g.traj_rise = traj_rise;
  return g;
}

EvalBatch EvalBatch::sample(int n, std::uint64_t seed, const RandomizationSpec& vehicles, const SpawnSpec& spawn) {
  if (n < 1) throw std::invalid_argument("EvalBatch: need at least one environment");
  EvalBatch b;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    b.vehicles.push_back(vehicles.sample(rng));
    b.spawns.push_back(sample_waypoint_spawn(spawn, rng));
    b.seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  }
  return b;
}

double pose_episode_score(const EpisodeRecord& rec, double failure_score) {
  if (!rec.success() || rec.steps.empty()) return failure_score;
  double sum = 0.0;
  for (const StepRecord& s : rec.steps) sum -= s.reward;
  return sum / static_cast<double>(rec.steps.size());
}

double fitness_pose(const PidGainSet& gains, const EvalBatch& batch, const PoseFitnessConfig& cfg, int jobs) {
  std::vector<double> scores(batch.size());
  parallel_for(batch.size(), jobs, [&](std::size_t i) {
    PosePidAgent agent(gains);
    const EpisodeRecord rec = run_waypoint_episode(agent, batch.vehicles[i], batch.spawns[i], cfg.episode,
                                                   batch.seeds[i]);
    scores[i] = pose_episode_score(rec, cfg.failure_score);
  });
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

std::vector<VelocitySetpoint> pulse_sequence(const VelocityFitnessConfig& cfg) {
  const int per_pulse = static_cast<int>(std::lround(cfg.pulse_duration * cfg.control_rate));
  std::vector<VelocitySetpoint> seq;
  seq.reserve(static_cast<std::size_t>(8 * per_pulse));
  for (int axis = 0; axis < 4; ++axis) {
    const double mag = axis == 3 ? cfg.yaw_rate : cfg.linear_speed;
    for (double sign : {1.0, -1.0}) {
      VelocitySetpoint sp = VelocitySetpoint::Zero();
      sp[axis] = sign * mag;
      seq.insert(seq.end(), static_cast<std::size_t>(per_pulse), sp);
    }
  }
  return seq;
}

double velocity_tracking_error(const PidGainSet& gains, const QuadParams& params, const VelocityFitnessConfig& cfg,
                               std::uint64_t seed) {
  DisturbanceConfig dist = cfg.disturbances;
  dist.seed = seed;
  Simulator sim(params, cfg.model, dist);
  sim.reset(QuadState{});
  ControllerConfig cc;
  cc.omega_max = cfg.model.omega_max;
  VelocityPidController pid(gains, cc);
  const double dt = 1.0 / cfg.control_rate;

  double err = 0.0;
  for (const VelocitySetpoint& sp : pulse_sequence(cfg)) {
    const QuadState measured = state_from_observation(sim.observe(Pose::Zero()), Pose::Zero());
    const Vec4 action = command_to_action(pid.step(measured, sp, dt));
    try {
      sim.step(action, dt);
    } catch (const DynamicsError&) {
      return cfg.failure_error;
    }
    const QuadState& s = sim.state();
    if (!s.valid()) return cfg.failure_error;
    const Vec3 v = heading_velocity(s);
    err += dt * ((sp.head<3>() - v).cwiseAbs().sum() + std::abs(sp[3] - yaw_rate(s)));
  }
  return err;
}

double fitness_velocity(const PidGainSet& gains, const EvalBatch& batch, const VelocityFitnessConfig& cfg, int jobs) {
  std::vector<double> scores(batch.size());
  parallel_for(batch.size(), jobs, [&](std::size_t i) {
    scores[i] = soft_clip(velocity_tracking_error(gains, batch.vehicles[i], cfg, batch.seeds[i]), cfg.knee);
  });
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

TuneResult tune_pid(const TuneConfig& cfg, const std::function<void(const TuneIteration&)>& on_iteration) {
  const SearchSpec& spec = cfg.search;
  spec.validate();
  const bool pose = cfg.stack == PidStack::kPose;
  if (spec.dim() != (pose ? kWithTrajectory : kGainCount)) {
    throw std::invalid_argument("tune_pid: search dimension does not match the controller stack");
  }
  const EvalBatch batch = EvalBatch::sample(cfg.batch_size, derive_seed(cfg.seed, 0));
  auto score = [&](const PidGainSet& g) {
    return pose ? fitness_pose(g, batch, cfg.pose, cfg.jobs) : fitness_velocity(g, batch, cfg.velocity, cfg.jobs);
  };

  TuneResult result;
  result.best_gains = gains_from_vector(constrain(spec.x0, spec));
  result.best_fitness = std::numeric_limits<double>::infinity();
  Cmaes es(spec.x0, spec.sigma0, derive_seed(cfg.seed, 1), spec.population);
  for (int it = 0; it < spec.iterations; ++it) {
    const std::vector<Eigen::VectorXd>& pop = es.ask();
    std::vector<double> fit(pop.size());
    for (std::size_t k = 0; k < pop.size(); ++k) {
      const PidGainSet g = gains_from_vector(constrain(pop[k], spec));
      fit[k] = score(g);
      if (fit[k] < result.best_fitness) {
        result.best_fitness = fit[k];
        result.best_gains = g;
      }
    }
    es.tell(fit);

    TuneIteration rec;
    rec.iteration = it + 1;
    rec.evaluations = es.evaluations();
    rec.best = *std::min_element(fit.begin(), fit.end());
    rec.median = median_of(fit);
    rec.best_so_far = result.best_fitness;
    rec.sigma = es.sigma();
    result.history.push_back(rec);
    if (on_iteration) on_iteration(rec);
  }
  return result;
}

}  // namespace quadrl
