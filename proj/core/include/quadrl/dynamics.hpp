#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace quadrl {

inline constexpr double kGravity = 9.81;
inline constexpr double kPi = 3.14159265358979323846;

/// Rotor speed of the nominal vehicle at hover (RPM).
inline constexpr double kNominalHoverRpm = 5323.0;

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Pose setpoint: x, y, z (m) and yaw (rad).
using Pose = Eigen::Vector4d;

class DynamicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pitch reached +/- pi/2, where the Euler-rate Jacobian is singular.
class SingularAttitudeError : public DynamicsError {
 public:
  using DynamicsError::DynamicsError;
};

/// Integration produced a non-finite state.
class DivergenceError : public DynamicsError {
 public:
  using DynamicsError::DynamicsError;
};

/// Physical description of a plus-frame quadrotor.
/// Propeller dimensions are in inches, lengths in metres, mass in kilograms.
struct QuadParams {
  double prop_diameter = 10.0;
  double prop_pitch = 0.0;  // 0 selects the hover-calibrated default
  double arm_length = 0.3;
  double hub_radius = 0.10;
  double mass = 1.2;

  /// Throws std::invalid_argument if a field is non-positive or the arm is
  /// shorter than the hub radius.
  void validate() const;

  bool operator==(const QuadParams&) const = default;
};

/// Model constants that are not pinned by the vehicle geometry.
struct ModelConfig {
  double hub_mass_fraction = 0.6;
  double rotor_mass_fraction = 0.1;  // per rotor
  double yaw_drag_coeff = 0.016;     // metres; rotor torque = coeff * thrust
  double omega_max = 0.0;            // 0 selects default_omega_max()
  int substeps = 50;

  /// omega_max with the default applied.
  double max_rpm() const;
  void validate() const;
};

/// 12-dimensional rigid-body state. Attitude is (roll, pitch, yaw), ZYX order.
struct QuadState {
  Vec3 nu = Vec3::Zero();        // body-frame linear velocity, m/s
  Vec3 omega = Vec3::Zero();     // body-frame angular velocity, rad/s
  Vec3 position = Vec3::Zero();  // inertial position, m (Z up)
  Vec3 attitude = Vec3::Zero();  // roll, pitch, yaw, rad

  bool finite() const;
  /// Finite and away from the pitch/roll +/- pi/2 envelope.
  bool valid() const;

  Eigen::Matrix<double, 12, 1> to_vector() const;
  static QuadState from_vector(const Eigen::Matrix<double, 12, 1>& v);

  /// Inertial-frame linear velocity.
  Vec3 world_velocity() const;

  bool operator==(const QuadState&) const = default;
};

struct MotorSpeeds {
  Vec4 rpm = Vec4::Zero();

  bool operator==(const MotorSpeeds&) const = default;
};

struct DisturbanceConfig {
  double sensor_noise_std = 0.0;
  bool motor_filter_enabled = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Observation layout: position error (3), yaw error, roll, pitch,
/// body linear velocity (3), body angular rate (3).
inline constexpr int kObsDim = 12;
using Observation = Eigen::Matrix<double, kObsDim, 1>;

namespace obs {
inline constexpr int kPosErr = 0;
inline constexpr int kYawErr = 3;
inline constexpr int kRoll = 4;
inline constexpr int kPitch = 5;
inline constexpr int kVel = 6;
inline constexpr int kRate = 9;
}  // namespace obs

/// T = k * Omega^2; returns k for these propellers.
double thrust_coefficient(const QuadParams& params);

/// Per-rotor static thrust (N) for a rotor speed in RPM.
double rotor_thrust(const QuadParams& params, double rpm);

/// Propeller pitch that makes a vehicle of the given diameter and mass hover
/// at the given rotor speed.
double hover_pitch(double prop_diameter, double mass, double hover_rpm);

/// Pitch that puts the nominal 10 in / 1.2 kg vehicle at its 5323 RPM hover.
double default_prop_pitch();

/// Pitch with the default applied when params.prop_pitch is 0.
double effective_pitch(const QuadParams& params);

/// Rotor speed at which the four rotors together carry the vehicle weight.
double hover_rpm(const QuadParams& params);

/// Twice the hover speed of the heaviest training vehicle (12 in, 2.28 kg).
double default_omega_max();

/// The fixed-size reference vehicle (10 in props, 1.2 kg).
QuadParams nominal_params();

/// Diagonal inertia of a solid-sphere hub plus four point-mass rotors.
Mat3 inertia_matrix(const QuadParams& params, const ModelConfig& model = {});

/// Body-to-inertial rotation for ZYX (yaw-pitch-roll) Euler angles.
Mat3 rotation_matrix(const Vec3& attitude);

/// Maps body angular velocity to Euler angle rates. Throws
/// SingularAttitudeError when cos(pitch) vanishes.
Mat3 euler_rate_jacobian(const Vec3& attitude);

/// Total body force (along +Z) and body moments produced by the rotors.
struct RotorWrench {
  double thrust = 0.0;
  Vec3 moment = Vec3::Zero();
};
RotorWrench rotor_wrench(const QuadParams& params, const ModelConfig& model,
                         const MotorSpeeds& speeds);

/// Time derivative of every state component (returned in a QuadState).
QuadState state_derivative(const QuadState& state, const QuadParams& params,
                           const ModelConfig& model, const MotorSpeeds& speeds);

/// Advances the state by dt with model.substeps fixed RK4 sub-steps.
/// Throws SingularAttitudeError or DivergenceError.
QuadState integrate_step(const QuadState& state, const QuadParams& params,
                         const ModelConfig& model, const MotorSpeeds& speeds,
                         double dt);

/// Builds the controller observation for a pose target, adding i.i.d.
/// Gaussian noise to every channel when cfg.sensor_noise_std > 0.
Observation observe(const QuadState& state, const Pose& target,
                    const DisturbanceConfig& cfg, std::mt19937_64& rng);

/// Noise-free observation.
Observation observe(const QuadState& state, const Pose& target);

/// First-order motor lag: 0.5 * new + 0.5 * previous.
MotorSpeeds motor_filter(const MotorSpeeds& prev_cmd,
                         const MotorSpeeds& new_cmd);

MotorSpeeds clamp_speeds(const MotorSpeeds& speeds, double omega_max);

/// Normalized action in [-1, 1] (clamped) to rotor speeds in [0, omega_max].
MotorSpeeds action_to_speeds(const Vec4& action, double omega_max);

/// Inverse of action_to_speeds.
Vec4 speeds_to_action(const MotorSpeeds& speeds, double omega_max);

/// Wraps an angle to [-pi, pi).
double wrap_angle(double a);

}  // namespace quadrl
