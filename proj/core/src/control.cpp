#include "quadrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

namespace quadrl {

namespace {

double clamp_abs(double v, double limit) { return std::clamp(v, -limit, limit); }

Eigen::Vector2d to_heading(const Eigen::Vector2d& v, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

void check_gains(const PidGains& g, const char* name) {
  if (!(g.kp >= 0.0) || !(g.ki >= 0.0) || !(g.kd >= 0.0)) {
    throw std::invalid_argument(std::string("PidGainSet: negative gain in ") + name);
  }
}

}  // namespace

void PidGainSet::validate() const {
  check_gains(xy, "xy");
  check_gains(z, "z");
  check_gains(roll_pitch, "roll_pitch");
  check_gains(yaw, "yaw");
  if (!(traj_duration > 0.0) || !(traj_rise >= 0.0) || !(traj_rise <= 0.5)) {
    throw std::invalid_argument("PidGainSet: trajectory needs Te > 0 and 0 <= rt <= 0.5");
  }
}

PidGainSet reference_pose_gains() {
  PidGainSet g;
  g.xy = {0.52, 0.00, 0.40};
  g.z = {7.28, 8.24, 0.69};
  g.roll_pitch = {10.00, 0.01, 3.15};
  g.yaw = {3.62, 1.71, 4.09};
  g.traj_duration = 10.0;
  g.traj_rise = 0.335;
  return g;
}

PidGainSet reference_velocity_gains() {
  PidGainSet g;
  g.xy = {0.14, 0.00, 0.00};
  g.z = {4.96, 1.54, 0.00};
  g.roll_pitch = {9.88, 0.51, 0.96};
  g.yaw = {9.78, 0.00, 3.41};
  return g;
}

const Eigen::Matrix4d& allocation_matrix() {
  static const Eigen::Matrix4d m = [] {
    Eigen::Matrix4d a;
    a << 1, 1, 0, 1,
        1, 0, 1, -1,
        1, -1, 0, 1,
        1, 0, -1, -1;
    return a;
  }();
  return m;
}

const Eigen::Matrix4d& allocation_inverse() {
  static const Eigen::Matrix4d inv = allocation_matrix().inverse();
  return inv;
}

Vec4 allocate(const ControlVector& delta) { return allocation_matrix() * delta.delta; }

Pid::Pid(PidGains gains, double output_limit)
    : gains_(gains), limit_(output_limit) {}

double Pid::step(double error, double dt) {
  const double rate = has_prev_ ? (error - prev_error_) / dt : 0.0;
  return finish(error, rate, dt);
}

double Pid::step(double error, double error_rate, double dt) {
  return finish(error, error_rate, dt);
}

double Pid::finish(double error, double rate, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("Pid::step: dt must be > 0");
  integral_ += error * dt;
  if (gains_.ki > 0.0 && std::isfinite(limit_)) {
    const double bound = limit_ / gains_.ki;
    integral_ = std::clamp(integral_, -bound, bound);
  }
  prev_error_ = error;
  has_prev_ = true;
  const double out = gains_.kp * error + gains_.ki * integral_ + gains_.kd * rate;
  return clamp_abs(out, limit_);
}

void Pid::reset() {
  integral_ = 0.0;
  prev_error_ = 0.0;
  has_prev_ = false;
}

void TrapezoidTrajectory::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("TrapezoidTrajectory: duration must be > 0");
  if (!(rise_fraction >= 0.0 && rise_fraction <= 0.5)) {
    throw std::invalid_argument("TrapezoidTrajectory: rise_fraction must be in [0, 0.5]");
  }
}

TrapezoidTrajectory make_trajectory(const Pose& start, const Pose& goal,
                                    double duration, double rise_fraction) {
  TrapezoidTrajectory t;
  t.start = start;
  t.goal = goal;
  t.goal[3] = start[3] + wrap_angle(goal[3] - start[3]);
  t.duration = duration;
  t.rise_fraction = rise_fraction;
  t.validate();
  return t;
}

TrajectorySample trajectory_eval(const TrapezoidTrajectory& traj, double t) {
  TrajectorySample s;
  if (t >= traj.duration) {
    s.pose = traj.goal;
    return s;
  }
  t = std::max(t, 0.0);
  const double te = traj.duration;
  const double ta = traj.rise_fraction * te;
  for (int i = 0; i < 4; ++i) {
    const double d = traj.goal[i] - traj.start[i];
    const double vmax = d / (te * (1.0 - traj.rise_fraction));
    double pos, vel;
    if (ta <= 0.0) {
      pos = vmax * t;
      vel = vmax;
    } else if (t < ta) {
      const double a = vmax / ta;
      pos = 0.5 * a * t * t;
      vel = a * t;
    } else if (t <= te - ta) {
      pos = 0.5 * vmax * ta + vmax * (t - ta);
      vel = vmax;
    } else {
      const double a = vmax / ta;
      const double remaining = te - t;
      pos = d - 0.5 * a * remaining * remaining;
      vel = a * remaining;
    }
    s.pose[i] = traj.start[i] + pos;
    s.velocity[i] = vel;
  }
  return s;
}

double ControllerConfig::max_rpm() const {
  return omega_max > 0.0 ? omega_max : default_omega_max();
}

double ControllerConfig::hover_throttle() const {
  return 2.0 * hover_rpm(nominal_params()) / max_rpm() - 1.0;
}

Vec3 heading_velocity(const QuadState& state) {
  const Vec3 v = state.world_velocity();
  const Eigen::Vector2d h = to_heading(v.head<2>(), state.attitude.z());
  return {h.x(), h.y(), v.z()};
}

double yaw_rate(const QuadState& state) {
  return (euler_rate_jacobian(state.attitude) * state.omega).z();
}

Vec4 command_to_action(const ControlVector& delta) {
  return allocate(delta).cwiseMax(-1.0).cwiseMin(1.0);
}

PosePidController::PosePidController(const PidGainSet& gains,
                                     const ControllerConfig& cfg)
    : gains_(gains), cfg_(cfg) {
  gains_.validate();
  const ActuatorScaling& s = cfg_.scaling;
  x_ = Pid(gains_.xy, cfg_.attitude_limit);
  y_ = Pid(gains_.xy, cfg_.attitude_limit);
  z_ = Pid(gains_.z, 2.0 / s.throttle);
  roll_ = Pid(gains_.roll_pitch, 1.0 / s.roll_pitch);
  pitch_ = Pid(gains_.roll_pitch, 1.0 / s.roll_pitch);
  yaw_ = Pid(gains_.yaw, 1.0 / s.yaw);
}

void PosePidController::reset() {
  for (Pid* p : {&x_, &y_, &z_, &roll_, &pitch_, &yaw_}) p->reset();
  roll_target_ = pitch_target_ = 0.0;
}

ControlVector PosePidController::step(const QuadState& state,
                                      const TrajectorySample& setpoint,
                                      double dt) {
  const double yaw = state.attitude.z();
  const Vec3 err = setpoint.pose.head<3>() - state.position;
  const Eigen::Vector2d err_h = to_heading(err.head<2>(), yaw);

  // Derivative terms act on measured rates (velocity estimate and gyro)
  // rather than on differenced errors, so sensor noise is not amplified by 1/dt.
  const Vec3 meas_rate = state.world_velocity();
  const Eigen::Vector2d rate_h = to_heading(meas_rate.head<2>(), yaw);

  pitch_target_ = clamp_abs(x_.step(err_h.x(), -rate_h.x(), dt), cfg_.attitude_limit);
  roll_target_ = clamp_abs(-y_.step(err_h.y(), -rate_h.y(), dt), cfg_.attitude_limit);
  const double throttle_pid = z_.step(err.z(), -meas_rate.z(), dt);

  const double yaw_err = wrap_angle(setpoint.pose[3] - yaw);
  const Vec3 euler_rate = euler_rate_jacobian(state.attitude) * state.omega;

  const ActuatorScaling& s = cfg_.scaling;
  ControlVector out;
  out.delta[0] = std::clamp(cfg_.hover_throttle() + s.throttle * throttle_pid, -1.0, 1.0);
  out.delta[1] = s.roll_pitch * roll_.step(roll_target_ - state.attitude.x(), -euler_rate.x(), dt);
  out.delta[2] = s.roll_pitch * pitch_.step(pitch_target_ - state.attitude.y(), -euler_rate.y(), dt);
  out.delta[3] = s.yaw * yaw_.step(yaw_err, setpoint.velocity[3] - euler_rate.z(), dt);

  return out;
}

VelocityPidController::VelocityPidController(const PidGainSet& gains,
                                             const ControllerConfig& cfg)
    : gains_(gains), cfg_(cfg) {
  gains_.validate();
  const ActuatorScaling& s = cfg_.scaling;
  x_ = Pid(gains_.xy, cfg_.attitude_limit);
  y_ = Pid(gains_.xy, cfg_.attitude_limit);
  z_ = Pid(gains_.z, 2.0 / s.throttle);
  roll_ = Pid(gains_.roll_pitch, 1.0 / s.roll_pitch);
  pitch_ = Pid(gains_.roll_pitch, 1.0 / s.roll_pitch);
  yaw_ = Pid(gains_.yaw, 1.0 / s.yaw);
}

void VelocityPidController::reset() {
  for (Pid* p : {&x_, &y_, &z_, &roll_, &pitch_, &yaw_}) p->reset();
}

ControlVector VelocityPidController::step(const QuadState& state,
                                          const VelocitySetpoint& setpoint,
                                          double dt) {
  const Vec3 v = heading_velocity(state);
  const double pitch_target = clamp_abs(x_.step(setpoint[0] - v.x(), dt), cfg_.attitude_limit);
  const double roll_target = clamp_abs(-y_.step(setpoint[1] - v.y(), dt), cfg_.attitude_limit);
  const double throttle_pid = z_.step(setpoint[2] - v.z(), dt);

  const ActuatorScaling& s = cfg_.scaling;
  ControlVector out;
  out.delta[0] = std::clamp(cfg_.hover_throttle() + s.throttle * throttle_pid, -1.0, 1.0);
  const Vec3 euler_rate = euler_rate_jacobian(state.attitude) * state.omega;
  out.delta[1] = s.roll_pitch * roll_.step(roll_target - state.attitude.x(), -euler_rate.x(), dt);
  out.delta[2] = s.roll_pitch * pitch_.step(pitch_target - state.attitude.y(), -euler_rate.y(), dt);
  out.delta[3] = s.yaw * yaw_.step(setpoint[3] - euler_rate.z(), dt);
  return out;
}

}  // namespace quadrl
