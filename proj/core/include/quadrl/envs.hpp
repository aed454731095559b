#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "quadrl/control.hpp"
#include "quadrl/dynamics.hpp"
#include "quadrl/sac.hpp"

namespace quadrl {

/// Reward for a step that leaves the arena or destabilizes.
inline constexpr double kFailureReward = -80.0;

/// Independent, well-mixed seed for stream `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Training-time vehicle randomization. All bounds except the hub are tied
/// to the propeller diameter d (inches).
struct RandomizationSpec {
  bool enabled = true;
  double diameter_min = 6.0;
  double diameter_max = 12.0;
  double hub_min = 0.05;
  double hub_max = 0.15;
  double arm_slope_min = 0.0167, arm_slope_max = 0.0334, arm_offset = 0.05;
  double mass_slope_min = 0.1, mass_offset_min = -0.3;
  double mass_slope_max = 0.265, mass_offset_max = -0.9;
  QuadParams fixed = nominal_params();

  QuadParams sample(std::mt19937_64& rng) const;
  /// True when p lies inside the d-coupled bounds.
  bool admits(const QuadParams& p) const;
};

/// Vehicle ranges used for evaluation: arm and hub are pinned by d, mass
/// varies. The payload task uses a lower mass ceiling so the loaded vehicle
/// can still hover.
enum class TestTask { kWaypoint, kPickup };

struct TestRange {
  double diameter_min = 6.0;
  double diameter_max = 12.0;
  double arm_slope = 0.025, arm_offset = 0.05;
  double hub = 0.10;
  double mass_slope_min = 0.1, mass_offset_min = -0.3;
  double mass_slope_max = 0.265, mass_offset_max = -0.9;

  static TestRange for_task(TestTask task);
  double mass_min(double d) const { return mass_slope_min * d + mass_offset_min; }
  double mass_max(double d) const { return mass_slope_max * d + mass_offset_max; }
  QuadParams sample(std::mt19937_64& rng) const;
  bool admits(const QuadParams& p) const;
};

/// r = -|p| - 0.1 sqrt(roll^2 + pitch^2) - 0.5 |yaw error|, errors relative
/// to the target pose.
double waypoint_reward(const QuadState& state, const Pose& target);

/// Limits the commanded displacement to max_distance along the same line.
Vec3 clip_waypoint(const Vec3& position, const Vec3& target, double max_distance = 1.0);

/// Axis-aligned cube |x|,|y|,|z| <= half_width.
bool inside_arena(const Vec3& position, double half_width);

/// Spawn state for the waypoint task: distance from the origin along a
/// uniformly random direction, random roll/pitch/yaw, at rest.
struct SpawnSpec {
  double distance = 1.0;
  double roll_pitch_range = 0.064 * kPi;
  double yaw_range = 0.3 * kPi;
};
QuadState sample_waypoint_spawn(const SpawnSpec& spec, std::mt19937_64& rng);

/// State the controller believes it is in, rebuilt from an observation and
/// the target pose it was taken against.
QuadState state_from_observation(const Observation& obs, const Pose& target);

/// One vehicle plus actuator/sensor disturbances, stepped at a fixed
/// control period.
class Simulator {
 public:
  Simulator(const QuadParams& params, const ModelConfig& model, const DisturbanceConfig& disturbances);

  /// Places the vehicle and clears the motor filter history.
  void reset(const QuadState& state);
  /// Moves the vehicle without touching the motor filter.
  void set_state(const QuadState& state) { state_ = state; }
  void set_params(const QuadParams& params);

  /// Saturates, filters (if enabled) and applies the action for dt seconds.
  /// Propagates DynamicsError from the integrator.
  void step(const Vec4& action, double dt);

  Observation observe(const Pose& target);

  const QuadState& state() const { return state_; }
  const QuadParams& params() const { return params_; }
  const ModelConfig& model() const { return model_; }
  const MotorSpeeds& applied_speeds() const { return applied_; }

 private:
  QuadParams params_;
  ModelConfig model_;
  DisturbanceConfig disturbances_;
  double omega_max_;
  QuadState state_;
  MotorSpeeds applied_;
  bool has_history_ = false;
  std::mt19937_64 noise_rng_;
};

/// How the agent's 4 outputs drive the vehicle.
enum class ActionMode {
  kMotor,     // normalized rotor speeds
  kVelocity,  // scaled velocity/yaw-rate setpoints for the velocity PID
};

struct VelocityActionScale {
  double linear = 1.5;    // m/s at |a| = 1
  double yaw_rate = 1.5;  // rad/s at |a| = 1
};

VelocitySetpoint action_to_velocity_setpoint(const Vec4& action, const VelocityActionScale& scale);

struct WaypointEnvConfig {
  RandomizationSpec randomization;
  SpawnSpec spawn;
  double control_rate = 20.0;  // Hz
  int max_steps = 1200;
  double arena_half_width = 1.5;
  ActionMode action_mode = ActionMode::kMotor;
  VelocityActionScale velocity_scale;
  /// Velocity-mode PID tick rate; the PID gains are only stable at the faster
  /// evaluation rate, so each agent step spans several PID ticks.
  double pid_rate = 40.0;
  PidGainSet velocity_gains = reference_velocity_gains();
  ModelConfig model;
  DisturbanceConfig disturbances;

  void validate() const;
};

/// The training task: fly from a random point 1 m out back to the origin
/// and hold a level, zero-yaw attitude.
class WaypointEnv : public EpisodicEnv {
 public:
  explicit WaypointEnv(WaypointEnvConfig cfg);

  Observation reset(std::mt19937_64& rng) override;
  /// Reset with an explicit vehicle and spawn state.
  Observation reset(const QuadParams& params, const QuadState& spawn, std::uint64_t noise_seed);
  StepResult step(const Vec4& action) override;
  double position_error() const override;

  const QuadState& state() const;
  const QuadParams& params() const;
  int steps() const { return steps_; }
  bool done() const { return done_; }
  const WaypointEnvConfig& config() const { return cfg_; }

 private:
  WaypointEnvConfig cfg_;
  std::optional<Simulator> sim_;
  std::optional<VelocityPidController> velocity_pid_;
  Observation last_obs_ = Observation::Zero();
  int steps_ = 0;
  bool done_ = false;
};

// --- evaluation harness ----------------------------------------------------

/// What a controller sees at each control step.
struct ControlInput {
  Observation obs = Observation::Zero();  // measured, relative to `target`
  Pose target = Pose::Zero();             // effective (possibly clipped) target
  Pose waypoint = Pose::Zero();           // the actual waypoint being flown to
  double time = 0.0;                      // seconds since episode start
  double dt = 0.025;
  bool new_waypoint = false;              // first step towards `waypoint`
};

struct ControllerCommand {
  Vec4 action = Vec4::Zero();
  /// Test harness hook: place the vehicle here before applying the action.
  std::optional<QuadState> teleport;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset() = 0;
  virtual ControllerCommand act(const ControlInput& input) = 0;
  virtual std::unique_ptr<Controller> clone() const = 0;
  virtual std::string name() const = 0;
};

enum class Outcome { kSuccess, kBoundary, kTimeout, kUnstable };
const char* outcome_name(Outcome o);

struct StepRecord {
  double time = 0.0;
  QuadState state;
  Vec4 action = Vec4::Zero();
  double reward = 0.0;
  double mass = 0.0;
  double hub = 0.0;
  int phase = 0;
};

struct EpisodeRecord {
  QuadParams params;
  std::uint64_t seed = 0;
  QuadState initial_state;
  std::vector<StepRecord> steps;
  Outcome outcome = Outcome::kTimeout;
  std::vector<double> waypoint_times;  // arrival times, seconds

  bool success() const { return outcome == Outcome::kSuccess; }
  double duration() const { return steps.empty() ? 0.0 : steps.back().time; }
};

/// Per-step CSV rows and a one-line summary; both have fixed headers.
void write_steps_csv_header(std::ostream& out);
void write_steps_csv(std::ostream& out, const EpisodeRecord& rec, int episode);
void write_summary_csv_header(std::ostream& out);
void write_summary_csv(std::ostream& out, const EpisodeRecord& rec, int episode);

struct WaypointEvalConfig {
  SpawnSpec spawn;
  double control_rate = 40.0;
  int max_steps = 500;  // 12.5 s
  double arena_half_width = 1.5;
  ModelConfig model;
  DisturbanceConfig disturbances;  // seed is replaced per episode
  double max_target_distance = 1.0;

  void validate() const;
};

/// Flies the waypoint task from `spawn`; success means staying inside the
/// arena and stable for the whole episode.
EpisodeRecord run_waypoint_episode(Controller& controller, const QuadParams& params, const QuadState& spawn,
                                   const WaypointEvalConfig& cfg, std::uint64_t seed);

struct CourseSpec {
  Vec3 pickup_point{-0.8, -0.3, -0.5};
  Vec3 drop_point{0.8, 0.3, 0.5};
  double payload_mass_factor = 0.30;
  double payload_hub_delta = 0.10;
  double waypoint_radius = 0.15;
  double stability_threshold = 0.15;  // RMS rad and rad/s
  double stability_window = 1.0;      // seconds
  int steps_per_waypoint = 500;
  double spawn_half_width = 0.25;
  double arena_half_width = 1.2;
  double control_rate = 40.0;
  double max_target_distance = 1.0;
  SpawnSpec attitude_spawn;
  ModelConfig model;
  DisturbanceConfig disturbances{0.05, true, 0};

  void validate() const;
  /// Pickup, drop, pickup.
  std::vector<Vec3> waypoints() const;
  QuadParams loaded(const QuadParams& p) const;
};

QuadState sample_course_spawn(const CourseSpec& spec, std::mt19937_64& rng);

EpisodeRecord run_payload_course(Controller& controller, const QuadParams& params, const QuadState& spawn,
                                 const CourseSpec& spec, std::uint64_t seed);

}  // namespace quadrl
