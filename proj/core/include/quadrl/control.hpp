#pragma once

#include <limits>

#include <Eigen/Core>

#include "quadrl/dynamics.hpp"

namespace quadrl {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;

  bool operator==(const PidGains&) const = default;
};

/// The reduced gain set searched by the tuner: X and Y share gains, as do
/// roll and pitch. The trajectory parameters only matter for the pose stack.
struct PidGainSet {
  PidGains xy;
  PidGains z;
  PidGains roll_pitch;
  PidGains yaw;
  double traj_duration = 10.0;  // Te, seconds
  double traj_rise = 0.335;     // rise fraction of Te at each end

  /// Throws std::invalid_argument on negative gains or bad trajectory params.
  void validate() const;

  bool operator==(const PidGainSet&) const = default;
};

/// One PID per controlled degree of freedom (18 gains).
struct FullGains {
  PidGains x, y, z, roll, pitch, yaw;

  bool operator==(const FullGains&) const = default;
};

/// Reference pose-stack gains, tuned with a 10 s / 33.5 % trajectory.
PidGainSet reference_pose_gains();
/// Reference velocity-stack gains.
PidGainSet reference_velocity_gains();

/// Collective/torque command in normalized motor units:
/// [throttle, roll torque, pitch torque, yaw torque].
/// Throttle is the collective normalized action, so -1 means zero thrust.
struct ControlVector {
  Vec4 delta = Vec4::Zero();
};

/// Plus-frame allocation matrix (rotor speeds from throttle/roll/pitch/yaw).
const Eigen::Matrix4d& allocation_matrix();
const Eigen::Matrix4d& allocation_inverse();

/// Normalized per-rotor command, before saturation.
Vec4 allocate(const ControlVector& delta);

/// Scalar PID with stored integral and backward-difference derivative.
/// The integral is clamped so ki * integral never exceeds the output limit.
class Pid {
 public:
  Pid() = default;
  explicit Pid(PidGains gains,
               double output_limit = std::numeric_limits<double>::infinity());

  /// Derivative on the error (backward difference).
  double step(double error, double dt);
  /// Caller-supplied error rate, e.g. minus the measured velocity when the
  /// derivative should act on the measurement.
  double step(double error, double error_rate, double dt);

  void reset();

  double integral() const { return integral_; }
  const PidGains& gains() const { return gains_; }

 private:
  double finish(double error, double rate, double dt);

  PidGains gains_;
  double limit_ = std::numeric_limits<double>::infinity();
  double integral_ = 0.0;
  double prev_error_ = 0.0;
  bool has_prev_ = false;
};

/// Trapezoidal-velocity straight-line move in x, y, z and yaw.
struct TrapezoidTrajectory {
  Pose start = Pose::Zero();
  Pose goal = Pose::Zero();
  double duration = 10.0;
  double rise_fraction = 0.335;

  void validate() const;
};

struct TrajectorySample {
  Pose pose = Pose::Zero();
  Pose velocity = Pose::Zero();
};

/// Builds a trajectory whose goal yaw is unwrapped onto the short way round.
TrapezoidTrajectory make_trajectory(const Pose& start, const Pose& goal,
                                    double duration, double rise_fraction);

/// Setpoint at time t (seconds since the trajectory began).
TrajectorySample trajectory_eval(const TrapezoidTrajectory& traj, double t);

/// PID output to normalized command scale per channel.
struct ActuatorScaling {
  double throttle = 0.5;
  double roll_pitch = 0.055;
  double yaw = 0.035;
};

struct ControllerConfig {
  ActuatorScaling scaling;
  double attitude_limit = 0.3;  // rad, outer-loop roll/pitch target clamp
  double omega_max = 0.0;       // 0 selects default_omega_max()

  /// Normalized collective that holds the nominal (not the true) vehicle.
  double hover_throttle() const;
  double max_rpm() const;
};

/// Position + yaw tracking: outer loop to attitude targets and throttle,
/// inner loop to torques.
class PosePidController {
 public:
  PosePidController(const PidGainSet& gains, const ControllerConfig& cfg = {});

  void reset();

  ControlVector step(const QuadState& state, const TrajectorySample& setpoint,
                     double dt);

  /// Attitude targets from the most recent step (roll, pitch).
  double roll_target() const { return roll_target_; }
  double pitch_target() const { return pitch_target_; }

  const PidGainSet& gains() const { return gains_; }

 private:
  PidGainSet gains_;
  ControllerConfig cfg_;
  Pid x_, y_, z_, roll_, pitch_, yaw_;
  double roll_target_ = 0.0;
  double pitch_target_ = 0.0;
};

/// Velocity setpoint: heading-frame vx, vy, vertical vz (m/s), yaw rate (rad/s).
using VelocitySetpoint = Eigen::Vector4d;

/// Velocity + yaw-rate tracking used under the learned high-level policy.
class VelocityPidController {
 public:
  VelocityPidController(const PidGainSet& gains,
                        const ControllerConfig& cfg = {});

  void reset();

  ControlVector step(const QuadState& state, const VelocitySetpoint& setpoint,
                     double dt);

  const PidGainSet& gains() const { return gains_; }

 private:
  PidGainSet gains_;
  ControllerConfig cfg_;
  Pid x_, y_, z_, roll_, pitch_, yaw_;
};

/// Yaw-aligned frame velocity: inertial velocity rotated by -yaw.
Vec3 heading_velocity(const QuadState& state);

/// Inertial yaw rate from the body rates.
double yaw_rate(const QuadState& state);

/// Allocated, clamped normalized action for a control vector.
Vec4 command_to_action(const ControlVector& delta);

}  // namespace quadrl
