#include "quadrl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>

namespace quadrl {

namespace {

// T = 4.392e-8 * Omega * d^3.5 / sqrt(pitch) * (4.23e-4 * Omega * pitch)
constexpr double kThrustA = 4.392e-8;
constexpr double kThrustB = 4.23e-4;

constexpr double kNominalDiameter = 10.0;
constexpr double kNominalMass = 1.2;
constexpr double kHeaviestDiameter = 12.0;

using StateVec = Eigen::Matrix<double, 12, 1>;

double thrust_coefficient_raw(double diameter, double pitch) {
  return kThrustA * kThrustB * std::pow(diameter, 3.5) * std::sqrt(pitch);
}

struct Precomputed {
  Vec3 inertia;
  Vec3 inv_inertia;
  double inv_mass;
  RotorWrench wrench;
};

StateVec derivative(const StateVec& x, const Precomputed& pc) {
  const Vec3 nu = x.segment<3>(0);
  const Vec3 omega = x.segment<3>(3);
  const Vec3 attitude = x.segment<3>(9);

  const Mat3 r = rotation_matrix(attitude);
  const Mat3 s = euler_rate_jacobian(attitude);

  StateVec dx;
  const Vec3 gravity(0.0, 0.0, -kGravity);
  dx.segment<3>(0) = -omega.cross(nu) + r.transpose() * gravity +
                     Vec3(0.0, 0.0, pc.wrench.thrust * pc.inv_mass);
  const Vec3 i_omega = pc.inertia.cwiseProduct(omega);
  dx.segment<3>(3) =
      pc.inv_inertia.cwiseProduct(pc.wrench.moment - omega.cross(i_omega));
  dx.segment<3>(6) = r * nu;
  dx.segment<3>(9) = s * omega;
  return dx;
}

Precomputed precompute(const QuadParams& params, const ModelConfig& model,
                       const MotorSpeeds& speeds) {
  Precomputed pc;
  pc.inertia = inertia_matrix(params, model).diagonal();
  pc.inv_inertia = pc.inertia.cwiseInverse();
  pc.inv_mass = 1.0 / params.mass;
  pc.wrench = rotor_wrench(params, model, speeds);
  return pc;
}

}  // namespace

void QuadParams::validate() const {
  if (!(prop_diameter > 0.0) || !(arm_length > 0.0) || !(hub_radius > 0.0) ||
      !(mass > 0.0) || !(prop_pitch >= 0.0)) {
    throw std::invalid_argument("QuadParams: all fields must be positive");
  }
  if (arm_length < hub_radius - 1e-9) {  // tolerate round-off at equality
    throw std::invalid_argument("QuadParams: arm_length " +
                                std::to_string(arm_length) +
                                " is shorter than hub_radius " +
                                std::to_string(hub_radius));
  }
}

double ModelConfig::max_rpm() const {
  return omega_max > 0.0 ? omega_max : default_omega_max();
}

void ModelConfig::validate() const {
  if (hub_mass_fraction < 0.0 || rotor_mass_fraction < 0.0 ||
      hub_mass_fraction + 4.0 * rotor_mass_fraction > 1.0 + 1e-12) {
    throw std::invalid_argument("ModelConfig: mass fractions must be >= 0 and sum to <= 1");
  }
  if (omega_max < 0.0) throw std::invalid_argument("ModelConfig: omega_max < 0");
  if (substeps < 1 || substeps > 500) {
    throw std::invalid_argument("ModelConfig: substeps must be in [1, 500]");
  }
}

bool QuadState::finite() const {
  return nu.allFinite() && omega.allFinite() && position.allFinite() &&
         attitude.allFinite();
}

bool QuadState::valid() const {
  return finite() && std::abs(attitude.x()) < kPi / 2 &&
         std::abs(attitude.y()) < kPi / 2;
}

StateVec QuadState::to_vector() const {
  StateVec v;
  v << nu, omega, position, attitude;
  return v;
}

QuadState QuadState::from_vector(const StateVec& v) {
  QuadState s;
  s.nu = v.segment<3>(0);
  s.omega = v.segment<3>(3);
  s.position = v.segment<3>(6);
  s.attitude = v.segment<3>(9);
  return s;
}

Vec3 QuadState::world_velocity() const { return rotation_matrix(attitude) * nu; }

void DisturbanceConfig::validate() const {
  if (!(sensor_noise_std >= 0.0)) {
    throw std::invalid_argument("DisturbanceConfig: sensor_noise_std must be >= 0");
  }
}

double thrust_coefficient(const QuadParams& params) {
  return thrust_coefficient_raw(params.prop_diameter, effective_pitch(params));
}

double rotor_thrust(const QuadParams& params, double rpm) {
  return thrust_coefficient(params) * rpm * rpm;
}

double hover_pitch(double prop_diameter, double mass, double hover_rpm) {
  // Thrust is linear in sqrt(pitch), so the hover condition solves in closed form.
  const double per_rotor = mass * kGravity / 4.0;
  const double root = per_rotor / (kThrustA * kThrustB *
                                   std::pow(prop_diameter, 3.5) * hover_rpm *
                                   hover_rpm);
  return root * root;
}

double default_prop_pitch() {
  static const double pitch =
      hover_pitch(kNominalDiameter, kNominalMass, kNominalHoverRpm);
  return pitch;
}

double effective_pitch(const QuadParams& params) {
  return params.prop_pitch > 0.0 ? params.prop_pitch : default_prop_pitch();
}

double hover_rpm(const QuadParams& params) {
  return std::sqrt(params.mass * kGravity / (4.0 * thrust_coefficient(params)));
}

double default_omega_max() {
  QuadParams heaviest;
  heaviest.prop_diameter = kHeaviestDiameter;
  heaviest.mass = 0.265 * kHeaviestDiameter - 0.9;
  return 2.0 * hover_rpm(heaviest);
}

QuadParams nominal_params() { return QuadParams{}; }

Mat3 inertia_matrix(const QuadParams& params, const ModelConfig& model) {
  const double m_hub = model.hub_mass_fraction * params.mass;
  const double m_rotor = model.rotor_mass_fraction * params.mass;
  const double sphere = 0.4 * m_hub * params.hub_radius * params.hub_radius;
  const double l2 = params.arm_length * params.arm_length;
  Mat3 inertia = Mat3::Zero();
  inertia(0, 0) = sphere + 2.0 * l2 * m_rotor;
  inertia(1, 1) = sphere + 2.0 * l2 * m_rotor;
  inertia(2, 2) = sphere + 4.0 * l2 * m_rotor;
  return inertia;
}

Mat3 rotation_matrix(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y()), sp = std::sin(attitude.y());
  const double cy = std::cos(attitude.z()), sy = std::sin(attitude.z());
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
      sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
      -sp, cp * sr, cp * cr;
  return r;
}

Mat3 euler_rate_jacobian(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y());
  if (std::abs(cp) < 1e-12) {
    throw SingularAttitudeError("euler_rate_jacobian: pitch at +/- pi/2");
  }
  const double tp = std::tan(attitude.y());
  Mat3 s;
  s << 1.0, sr * tp, cr * tp,
      0.0, cr, -sr,
      0.0, sr / cp, cr / cp;
  return s;
}

RotorWrench rotor_wrench(const QuadParams& params, const ModelConfig& model,
                         const MotorSpeeds& speeds) {
  // Rotor 1 on +Y, 2 on -X, 3 on -Y, 4 on +X; 1 and 3 spin so their drag
  // torque is +Z, 2 and 4 the opposite.
  const double k = thrust_coefficient(params);
  const Vec4 t = k * speeds.rpm.cwiseProduct(speeds.rpm);
  const double l = params.arm_length;
  RotorWrench w;
  w.thrust = t.sum();
  w.moment = Vec3(l * (t[0] - t[2]), l * (t[1] - t[3]),
                  model.yaw_drag_coeff * (t[0] - t[1] + t[2] - t[3]));
  return w;
}

QuadState state_derivative(const QuadState& state, const QuadParams& params,
                           const ModelConfig& model, const MotorSpeeds& speeds) {
  return QuadState::from_vector(
      derivative(state.to_vector(), precompute(params, model, speeds)));
}

QuadState integrate_step(const QuadState& state, const QuadParams& params,
                         const ModelConfig& model, const MotorSpeeds& speeds,
                         double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be > 0");
  const Precomputed pc = precompute(params, model, speeds);
  const int n = std::max(1, model.substeps);
  const double h = dt / n;
  StateVec x = state.to_vector();
  for (int i = 0; i < n; ++i) {
    const StateVec k1 = derivative(x, pc);
    const StateVec k2 = derivative(x + 0.5 * h * k1, pc);
    const StateVec k3 = derivative(x + 0.5 * h * k2, pc);
    const StateVec k4 = derivative(x + h * k3, pc);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw DivergenceError("integrate_step: non-finite state");
    }
  }
  return QuadState::from_vector(x);
}

Observation observe(const QuadState& state, const Pose& target) {
  Observation o;
  o.segment<3>(obs::kPosErr) = state.position - target.head<3>();
  o[obs::kYawErr] = wrap_angle(state.attitude.z() - target[3]);
  o[obs::kRoll] = state.attitude.x();
  o[obs::kPitch] = state.attitude.y();
  o.segment<3>(obs::kVel) = state.nu;
  o.segment<3>(obs::kRate) = state.omega;
  return o;
}

Observation observe(const QuadState& state, const Pose& target,
                    const DisturbanceConfig& cfg, std::mt19937_64& rng) {
  Observation o = observe(state, target);
  if (cfg.sensor_noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.sensor_noise_std);
    for (int i = 0; i < kObsDim; ++i) o[i] += noise(rng);
  }
  return o;
}

MotorSpeeds motor_filter(const MotorSpeeds& prev_cmd,
                         const MotorSpeeds& new_cmd) {
  return MotorSpeeds{0.5 * new_cmd.rpm + 0.5 * prev_cmd.rpm};
}

MotorSpeeds clamp_speeds(const MotorSpeeds& speeds, double omega_max) {
  return MotorSpeeds{speeds.rpm.cwiseMax(0.0).cwiseMin(omega_max)};
}

MotorSpeeds action_to_speeds(const Vec4& action, double omega_max) {
  const Vec4 a = action.cwiseMax(-1.0).cwiseMin(1.0);
  return MotorSpeeds{(a.array() + 1.0).matrix() * (0.5 * omega_max)};
}

Vec4 speeds_to_action(const MotorSpeeds& speeds, double omega_max) {
  return (speeds.rpm * (2.0 / omega_max)).array() - 1.0;
}

double wrap_angle(double a) {
  if (a >= -kPi && a < kPi) return a;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace quadrl
