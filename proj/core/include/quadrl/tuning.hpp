#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "quadrl/control.hpp"
#include "quadrl/envs.hpp"

namespace quadrl {

enum class PidStack { kPose, kVelocity };

/// Box-constrained search space. The optimizer works on unbounded raw
/// vectors that `constrain` folds into [lower, upper].
///
/// Reduced-vector layout: kp, ki, kd for the xy, z, roll/pitch and yaw loops
/// in that order, then trajectory duration and rise fraction for the pose stack.
struct SearchSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd x0;  // raw (unconstrained) initial mean
  double sigma0 = 2.0;
  int iterations = 1000;
  int population = 0;  // 0 selects the CMA-ES default

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;

  /// Pose stack search seeded from the reference gains.
  static SearchSpec pose();
  /// Velocity stack search seeded at 5.0 for every gain.
  static SearchSpec velocity();
  static SearchSpec for_stack(PidStack stack);
};

/// lo + (hi - lo) (sin(x) + 1) / 2 per dimension.
Eigen::VectorXd constrain(const Eigen::VectorXd& raw, const SearchSpec& spec);
/// A raw vector in [-pi/2, pi/2] that constrains to `bounded` (clamped into the box).
Eigen::VectorXd unconstrain(const Eigen::VectorXd& bounded, const SearchSpec& spec);

/// e below the knee, knee + sqrt(e - knee) above it.
double soft_clip(double e, double knee = 200.0);

/// 12 (gains only) or 14 (gains + trajectory) entries to a gain set. With 12
/// entries the trajectory fields keep their defaults.
PidGainSet gains_from_vector(const Eigen::VectorXd& reduced);
Eigen::VectorXd gains_to_vector(const PidGainSet& gains, bool with_trajectory);

/// Shares the xy gains between the x and y loops and the roll/pitch gains
/// between the roll and pitch loops.
FullGains expand_gains(const PidGainSet& gains);
/// Inverse of expand_gains; throws std::invalid_argument if the symmetric
/// loops disagree.
PidGainSet collapse_gains(const FullGains& full, double traj_duration = 10.0, double traj_rise = 0.335);

/// Frozen set of evaluation vehicles and start states shared by every candidate.
struct EvalBatch {
  std::vector<QuadParams> vehicles;
  std::vector<QuadState> spawns;
  std::vector<std::uint64_t> seeds;

  std::size_t size() const { return vehicles.size(); }
  static EvalBatch sample(int n, std::uint64_t seed, const RandomizationSpec& vehicles = {},
                          const SpawnSpec& spawn = {});
};

struct PoseFitnessConfig {
  WaypointEvalConfig episode;
  double failure_score = 80.0;
};

/// Mean per-step error (negated reward) of one waypoint episode, or the
/// failure score if the episode ended early.
double pose_episode_score(const EpisodeRecord& rec, double failure_score);

/// Batch average of pose_episode_score for the pose stack with `gains`.
double fitness_pose(const PidGainSet& gains, const EvalBatch& batch, const PoseFitnessConfig& cfg = {},
                    int jobs = 1);

struct VelocityFitnessConfig {
  double pulse_duration = 5.0;  // seconds per pulse
  double linear_speed = 1.0;    // m/s
  double yaw_rate = 1.0;        // rad/s
  double control_rate = 40.0;
  double failure_error = 1000.0;  // raw error charged to an unstable run
  double knee = 200.0;
  ModelConfig model;
  DisturbanceConfig disturbances;
};

/// Setpoints +x, -x, +y, -y, +z, -z, +yaw rate, -yaw rate; one entry per
/// control step.
std::vector<VelocitySetpoint> pulse_sequence(const VelocityFitnessConfig& cfg);

/// Integral of the summed absolute 4-DoF tracking error over the pulse
/// sequence, starting from hover at rest. Unstable runs return failure_error.
double velocity_tracking_error(const PidGainSet& gains, const QuadParams& params, const VelocityFitnessConfig& cfg,
                               std::uint64_t seed);

/// Batch average of the soft-clipped tracking error.
double fitness_velocity(const PidGainSet& gains, const EvalBatch& batch, const VelocityFitnessConfig& cfg = {},
                        int jobs = 1);

struct TuneConfig {
  PidStack stack = PidStack::kPose;
  SearchSpec search = SearchSpec::pose();
  int batch_size = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  PoseFitnessConfig pose;
  VelocityFitnessConfig velocity;
};

struct TuneIteration {
  int iteration = 0;
  std::int64_t evaluations = 0;
  double best = 0.0;    // this generation
  double median = 0.0;  // this generation
  double best_so_far = 0.0;
  double sigma = 0.0;
};

struct TuneResult {
  PidGainSet best_gains;
  double best_fitness = 0.0;
  std::vector<TuneIteration> history;
};

/// Runs the CMA-ES gain search. `on_iteration` (optional) sees each
/// generation as it completes.
TuneResult tune_pid(const TuneConfig& cfg, const std::function<void(const TuneIteration&)>& on_iteration = {});

}  // namespace quadrl
