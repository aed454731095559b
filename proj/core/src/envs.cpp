#include "quadrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace quadrl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

Pose pose_at(const Vec3& p) {
  Pose pose = Pose::Zero();
  pose.head<3>() = p;
  return pose;
}

/// Fixed-width number formatting so CSV output is byte-stable.
void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out << buf;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

// --- vehicle sampling ------------------------------------------------------

QuadParams RandomizationSpec::sample(std::mt19937_64& rng) const {
  if (!enabled) return fixed;
  QuadParams p;
  p.prop_diameter = uniform(rng, diameter_min, diameter_max);
  const double d = p.prop_diameter;
  p.hub_radius = uniform(rng, hub_min, hub_max);
  p.arm_length = uniform(rng, arm_slope_min * d + arm_offset, arm_slope_max * d + arm_offset);
  p.mass = uniform(rng, mass_slope_min * d + mass_offset_min, mass_slope_max * d + mass_offset_max);
  return p;
}

bool RandomizationSpec::admits(const QuadParams& p) const {
  const double d = p.prop_diameter;
  return in_range(d, diameter_min, diameter_max) && in_range(p.hub_radius, hub_min, hub_max) &&
         in_range(p.arm_length, arm_slope_min * d + arm_offset, arm_slope_max * d + arm_offset) &&
         in_range(p.mass, mass_slope_min * d + mass_offset_min, mass_slope_max * d + mass_offset_max);
}

TestRange TestRange::for_task(TestTask task) {
  TestRange r;
  if (task == TestTask::kPickup) {
    r.mass_slope_max = 0.2;
    r.mass_offset_max = -0.66;
  }
  return r;
}

QuadParams TestRange::sample(std::mt19937_64& rng) const {
  QuadParams p;
  p.prop_diameter = uniform(rng, diameter_min, diameter_max);
  p.arm_length = arm_slope * p.prop_diameter + arm_offset;
  p.hub_radius = hub;
  p.mass = uniform(rng, mass_min(p.prop_diameter), mass_max(p.prop_diameter));
  return p;
}

bool TestRange::admits(const QuadParams& p) const {
  const double d = p.prop_diameter;
  return in_range(d, diameter_min, diameter_max) && std::abs(p.arm_length - (arm_slope * d + arm_offset)) < 1e-12 &&
         p.hub_radius == hub && in_range(p.mass, mass_min(d), mass_max(d));
}

// --- task geometry ---------------------------------------------------------

double waypoint_reward(const QuadState& state, const Pose& target) {
  const Vec3 err = state.position - target.head<3>();
  const double tilt = std::hypot(state.attitude.x(), state.attitude.y());
  const double yaw_err = std::abs(wrap_angle(state.attitude.z() - target[3]));
  return -1.0 * err.norm() - 0.1 * tilt - 0.5 * yaw_err;
}

Vec3 clip_waypoint(const Vec3& position, const Vec3& target, double max_distance) {
  const Vec3 d = target - position;
  const double n = d.norm();
  if (n <= max_distance) return target;
  return position + d * (max_distance / n);
}

bool inside_arena(const Vec3& position, double half_width) {
  return (position.array().abs() <= half_width).all();
}

QuadState sample_waypoint_spawn(const SpawnSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 dir;
  do {
    dir = Vec3(n(rng), n(rng), n(rng));
  } while (dir.norm() < 1e-9);
  QuadState s;
  s.position = dir.normalized() * spec.distance;
  s.attitude = Vec3(uniform(rng, -spec.roll_pitch_range, spec.roll_pitch_range),
                    uniform(rng, -spec.roll_pitch_range, spec.roll_pitch_range),
                    uniform(rng, -spec.yaw_range, spec.yaw_range));
  return s;
}

QuadState state_from_observation(const Observation& o, const Pose& target) {
  QuadState s;
  s.position = o.segment<3>(obs::kPosErr) + target.head<3>();
  s.attitude = Vec3(o[obs::kRoll], o[obs::kPitch], wrap_angle(o[obs::kYawErr] + target[3]));
  s.nu = o.segment<3>(obs::kVel);
  s.omega = o.segment<3>(obs::kRate);
  return s;
}

// --- simulator -------------------------------------------------------------

Simulator::Simulator(const QuadParams& params, const ModelConfig& model, const DisturbanceConfig& disturbances)
    : params_(params),
      model_(model),
      disturbances_(disturbances),
      omega_max_(model.max_rpm()),
      noise_rng_(disturbances.seed) {
  params_.validate();
  model_.validate();
  disturbances_.validate();
}

void Simulator::reset(const QuadState& state) {
  state_ = state;
  applied_ = MotorSpeeds{};
  has_history_ = false;
}

void Simulator::set_params(const QuadParams& params) {
  params.validate();
  params_ = params;
}

void Simulator::step(const Vec4& action, double dt) {
  if (!action.allFinite()) throw DivergenceError("non-finite action");
  const MotorSpeeds cmd = action_to_speeds(action, omega_max_);
  if (disturbances_.motor_filter_enabled && has_history_) {
    applied_ = motor_filter(applied_, cmd);
  } else {
    applied_ = cmd;
  }
  has_history_ = true;
  applied_ = clamp_speeds(applied_, omega_max_);
  state_ = integrate_step(state_, params_, model_, applied_, dt);
}

Observation Simulator::observe(const Pose& target) {
  return quadrl::observe(state_, target, disturbances_, noise_rng_);
}

// --- training environment --------------------------------------------------

VelocitySetpoint action_to_velocity_setpoint(const Vec4& action, const VelocityActionScale& scale) {
  const Vec4 a = action.cwiseMax(-1.0).cwiseMin(1.0);
  return VelocitySetpoint(scale.linear * a[0], scale.linear * a[1], scale.linear * a[2], scale.yaw_rate * a[3]);
}

void WaypointEnvConfig::validate() const {
  if (!(control_rate > 0.0) || !(pid_rate > 0.0)) {
    throw std::invalid_argument("WaypointEnvConfig: control and PID rates must be > 0");
  }
  if (max_steps < 1) throw std::invalid_argument("WaypointEnvConfig: max_steps must be >= 1");
  if (!(arena_half_width > spawn.distance)) {
    throw std::invalid_argument("WaypointEnvConfig: arena must contain the spawn sphere");
  }
  model.validate();
  disturbances.validate();
  velocity_gains.validate();
}

WaypointEnv::WaypointEnv(WaypointEnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Observation WaypointEnv::reset(std::mt19937_64& rng) {
  const QuadParams params = cfg_.randomization.sample(rng);
  const QuadState spawn = sample_waypoint_spawn(cfg_.spawn, rng);
  return reset(params, spawn, rng());
}

Observation WaypointEnv::reset(const QuadParams& params, const QuadState& spawn, std::uint64_t noise_seed) {
  DisturbanceConfig d = cfg_.disturbances;
  d.seed = noise_seed;
  sim_.emplace(params, cfg_.model, d);
  sim_->reset(spawn);
  if (cfg_.action_mode == ActionMode::kVelocity) {
    ControllerConfig cc;
    cc.omega_max = cfg_.model.omega_max;
    velocity_pid_.emplace(cfg_.velocity_gains, cc);
  }
  steps_ = 0;
  done_ = false;
  last_obs_ = sim_->observe(Pose::Zero());
  return last_obs_;
}

StepResult WaypointEnv::step(const Vec4& action) {
  if (!sim_) throw std::logic_error("WaypointEnv::step before reset");
  if (done_) throw std::logic_error("WaypointEnv::step after the episode ended");
  const double dt = 1.0 / cfg_.control_rate;

  bool failed = false;
  try {
    if (cfg_.action_mode == ActionMode::kVelocity) {
      // The agent's setpoint is held while the PID ticks at its own rate.
      const VelocitySetpoint sp = action_to_velocity_setpoint(action, cfg_.velocity_scale);
      const int ticks = std::max(1, static_cast<int>(std::lround(cfg_.pid_rate / cfg_.control_rate)));
      const double h = dt / ticks;
      for (int i = 0; i < ticks; ++i) {
        const Observation o = i == 0 ? last_obs_ : sim_->observe(Pose::Zero());
        const QuadState measured = state_from_observation(o, Pose::Zero());
        sim_->step(command_to_action(velocity_pid_->step(measured, sp, h)), h);
      }
    } else {
      sim_->step(action, dt);
    }
  } catch (const DynamicsError&) {
    failed = true;
  }
  ++steps_;
  const QuadState& s = sim_->state();
  failed = failed || !s.valid() || !inside_arena(s.position, cfg_.arena_half_width);

  StepResult r;
  r.terminal = failed;
  r.reward = failed ? kFailureReward : waypoint_reward(s, Pose::Zero());
  r.obs = sim_->observe(Pose::Zero());
  if (!r.obs.allFinite()) r.obs = last_obs_;
  r.truncated = !failed && steps_ >= cfg_.max_steps;
  last_obs_ = r.obs;
  done_ = r.terminal || r.truncated;
  return r;
}

double WaypointEnv::position_error() const { return sim_ ? sim_->state().position.norm() : 0.0; }

const QuadState& WaypointEnv::state() const {
  if (!sim_) throw std::logic_error("WaypointEnv: no episode");
  return sim_->state();
}

const QuadParams& WaypointEnv::params() const {
  if (!sim_) throw std::logic_error("WaypointEnv: no episode");
  return sim_->params();
}

// --- records ---------------------------------------------------------------

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kSuccess: return "success";
    case Outcome::kBoundary: return "boundary";
    case Outcome::kTimeout: return "timeout";
    case Outcome::kUnstable: return "unstable";
  }
  return "unknown";
}

void write_steps_csv_header(std::ostream& out) {
  out << "episode,time,phase,x,y,z,roll,pitch,yaw,u,v,w,p,q,r,a0,a1,a2,a3,reward,mass,hub\n";
}

void write_steps_csv(std::ostream& out, const EpisodeRecord& rec, int episode) {
  for (const StepRecord& s : rec.steps) {
    out << episode << ',';
    put(out, s.time);
    out << ',' << s.phase;
    const auto sv = s.state.to_vector();
    // position, attitude, body velocity, body rates
    for (int i : {6, 7, 8, 9, 10, 11, 0, 1, 2, 3, 4, 5}) {
      out << ',';
      put(out, sv[i]);
    }
    for (int i = 0; i < 4; ++i) {
      out << ',';
      put(out, s.action[i]);
    }
    for (double v : {s.reward, s.mass, s.hub}) {
      out << ',';
      put(out, v);
    }
    out << '\n';
  }
}

void write_summary_csv_header(std::ostream& out) {
  out << "episode,outcome,steps,duration,prop_diameter,arm_length,hub_radius,mass,seed,waypoint_times\n";
}

void write_summary_csv(std::ostream& out, const EpisodeRecord& rec, int episode) {
  out << episode << ',' << outcome_name(rec.outcome) << ',' << rec.steps.size() << ',';
  put(out, rec.duration());
  for (double v : {rec.params.prop_diameter, rec.params.arm_length, rec.params.hub_radius, rec.params.mass}) {
    out << ',';
    put(out, v);
  }
  out << ',' << rec.seed << ',';
  for (std::size_t i = 0; i < rec.waypoint_times.size(); ++i) {
    if (i) out << ';';
    put(out, rec.waypoint_times[i]);
  }
  out << '\n';
}

// --- evaluation episodes ---------------------------------------------------

void WaypointEvalConfig::validate() const {
  if (!(control_rate > 0.0) || max_steps < 1) throw std::invalid_argument("WaypointEvalConfig: bad timing");
  if (!(arena_half_width > 0.0)) throw std::invalid_argument("WaypointEvalConfig: bad arena");
  model.validate();
  disturbances.validate();
}

namespace {

/// Shared per-step mechanics of the evaluation episodes. Returns false and
/// sets the outcome when the step ended the episode.
bool advance(Simulator& sim, Controller& controller, const ControlInput& input, const Pose& waypoint,
             double arena, int phase, double time, EpisodeRecord& rec) {
  const ControllerCommand cmd = controller.act(input);
  if (!cmd.action.allFinite()) {
    rec.outcome = Outcome::kUnstable;
    return false;
  }
  if (cmd.teleport) sim.set_state(*cmd.teleport);
  StepRecord sr;
  sr.time = time;
  sr.action = cmd.action;
  sr.mass = sim.params().mass;
  sr.hub = sim.params().hub_radius;
  sr.phase = phase;
  try {
    sim.step(cmd.action, input.dt);
  } catch (const DynamicsError&) {
    sr.state = sim.state();
    sr.reward = kFailureReward;
    rec.steps.push_back(sr);
    rec.outcome = Outcome::kUnstable;
    return false;
  }
  sr.state = sim.state();
  const bool unstable = !sr.state.valid();
  const bool outside = !unstable && !inside_arena(sr.state.position, arena);
  sr.reward = unstable || outside ? kFailureReward : waypoint_reward(sr.state, waypoint);
  rec.steps.push_back(sr);
  if (unstable) rec.outcome = Outcome::kUnstable;
  if (outside) rec.outcome = Outcome::kBoundary;
  return !(unstable || outside);
}

}  // namespace

EpisodeRecord run_waypoint_episode(Controller& controller, const QuadParams& params, const QuadState& spawn,
                                   const WaypointEvalConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EpisodeRecord rec;
  rec.params = params;
  rec.seed = seed;
  rec.initial_state = spawn;
  rec.steps.reserve(static_cast<std::size_t>(cfg.max_steps));

  DisturbanceConfig dist = cfg.disturbances;
  dist.seed = derive_seed(seed, 1);
  Simulator sim(params, cfg.model, dist);
  sim.reset(spawn);
  controller.reset();

  const double dt = 1.0 / cfg.control_rate;
  const Pose waypoint = Pose::Zero();
  rec.outcome = Outcome::kSuccess;
  for (int k = 0; k < cfg.max_steps; ++k) {
    ControlInput in;
    in.waypoint = waypoint;
    in.target = pose_at(clip_waypoint(sim.state().position, waypoint.head<3>(), cfg.max_target_distance));
    in.obs = sim.observe(in.target);
    in.time = k * dt;
    in.dt = dt;
    in.new_waypoint = k == 0;
    if (!advance(sim, controller, in, waypoint, cfg.arena_half_width, 0, (k + 1) * dt, rec)) break;
  }
  return rec;
}

void CourseSpec::validate() const {
  for (const Vec3& p : {pickup_point, drop_point}) {
    if (!inside_arena(p, arena_half_width)) throw std::invalid_argument("CourseSpec: waypoint outside the arena");
  }
  if (!inside_arena(pickup_point.array().abs() + spawn_half_width, arena_half_width)) {
    throw std::invalid_argument("CourseSpec: spawn cube leaves the arena");
  }
  if (!(waypoint_radius > 0.0) || !(stability_threshold > 0.0) || !(stability_window > 0.0)) {
    throw std::invalid_argument("CourseSpec: convergence thresholds must be positive");
  }
  if (steps_per_waypoint < 1 || !(control_rate > 0.0)) throw std::invalid_argument("CourseSpec: bad timing");
  if (!(payload_mass_factor > -1.0)) throw std::invalid_argument("CourseSpec: payload would remove all mass");
  model.validate();
  disturbances.validate();
}

std::vector<Vec3> CourseSpec::waypoints() const { return {pickup_point, drop_point, pickup_point}; }

QuadParams CourseSpec::loaded(const QuadParams& p) const {
  QuadParams q = p;
  q.mass = p.mass * (1.0 + payload_mass_factor);
  q.hub_radius = p.hub_radius + payload_hub_delta;
  return q;
}

QuadState sample_course_spawn(const CourseSpec& spec, std::mt19937_64& rng) {
  QuadState s;
  const double h = spec.spawn_half_width;
  s.position = spec.pickup_point + Vec3(uniform(rng, -h, h), uniform(rng, -h, h), uniform(rng, -h, h));
  const SpawnSpec& a = spec.attitude_spawn;
  s.attitude = Vec3(uniform(rng, -a.roll_pitch_range, a.roll_pitch_range),
                    uniform(rng, -a.roll_pitch_range, a.roll_pitch_range), uniform(rng, -a.yaw_range, a.yaw_range));
  return s;
}

EpisodeRecord run_payload_course(Controller& controller, const QuadParams& params, const QuadState& spawn,
                                 const CourseSpec& spec, std::uint64_t seed) {
  spec.validate();
  EpisodeRecord rec;
  rec.params = params;
  rec.seed = seed;
  rec.initial_state = spawn;

  DisturbanceConfig dist = spec.disturbances;
  dist.seed = derive_seed(seed, 1);
  Simulator sim(params, spec.model, dist);
  sim.reset(spawn);
  controller.reset();

  const double dt = 1.0 / spec.control_rate;
  const auto window = static_cast<std::size_t>(std::lround(spec.stability_window * spec.control_rate));
  // Trailing squared attitude (roll, pitch) and body-rate magnitudes.
  std::vector<double> tilt_sq(window, 0.0), rate_sq(window, 0.0);
  std::size_t filled = 0, cursor = 0;

  const std::vector<Vec3> waypoints = spec.waypoints();
  std::size_t phase = 0;
  int phase_steps = 0;
  bool new_waypoint = true;
  for (long k = 0;; ++k) {
    const Pose waypoint = pose_at(waypoints[phase]);
    ControlInput in;
    in.waypoint = waypoint;
    in.target = pose_at(clip_waypoint(sim.state().position, waypoint.head<3>(), spec.max_target_distance));
    in.obs = sim.observe(in.target);
    in.time = static_cast<double>(k) * dt;
    in.dt = dt;
    in.new_waypoint = new_waypoint;
    new_waypoint = false;
    const double time = static_cast<double>(k + 1) * dt;
    if (!advance(sim, controller, in, waypoint, spec.arena_half_width, static_cast<int>(phase), time, rec)) break;

    const QuadState& s = sim.state();
    tilt_sq[cursor] = s.attitude.x() * s.attitude.x() + s.attitude.y() * s.attitude.y();
    rate_sq[cursor] = s.omega.squaredNorm();
    cursor = (cursor + 1) % window;
    filled = std::min(filled + 1, window);
    ++phase_steps;

    const bool near = (s.position - waypoints[phase]).norm() < spec.waypoint_radius;
    bool stable = false;
    if (filled == window) {
      double tilt_sum = 0.0, rate_sum = 0.0;
      for (std::size_t i = 0; i < window; ++i) {
        tilt_sum += tilt_sq[i];
        rate_sum += rate_sq[i];
      }
      const double tilt_rms = std::sqrt(tilt_sum / (2.0 * window));
      const double rate_rms = std::sqrt(rate_sum / (3.0 * window));
      stable = tilt_rms < spec.stability_threshold && rate_rms < spec.stability_threshold;
    }
    if (near && stable) {
      rec.waypoint_times.push_back(time);
      if (phase == 0) sim.set_params(spec.loaded(params));
      if (phase == 1) sim.set_params(params);
      if (phase + 1 == waypoints.size()) {
        rec.outcome = Outcome::kSuccess;
        break;
      }
      ++phase;
      phase_steps = 0;
      new_waypoint = true;
      continue;
    }
    if (phase_steps >= spec.steps_per_waypoint) {
      rec.outcome = Outcome::kTimeout;
      break;
    }
  }
  return rec;
}

}  // namespace quadrl
