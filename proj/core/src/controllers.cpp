#include "quadrl/controllers.hpp"

#include <stdexcept>

namespace quadrl {

Vec4 policy_action(const Mlp& actor, const Observation& obs) {
  const Eigen::MatrixXd out = actor.forward(Eigen::MatrixXd(obs));
  // The mean head already passes through tanh.
  return out.col(0).head<kActionDim>();
}

namespace {
void check_actor(const Mlp& actor) {
  if (actor.input_dim() != kObsDim || actor.output_dim() != 2 * kActionDim) {
    throw std::invalid_argument("actor network has the wrong shape for this vehicle");
  }
}

Vec4 nominal_hover_action(const ControllerConfig& cfg) { return Vec4::Constant(cfg.hover_throttle()); }
}  // namespace

LearnedController::LearnedController(Mlp actor) : actor_(std::move(actor)) { check_actor(actor_); }

ControllerCommand LearnedController::act(const ControlInput& input) {
  return ControllerCommand{policy_action(actor_, input.obs), std::nullopt};
}

std::unique_ptr<Controller> LearnedController::clone() const { return std::make_unique<LearnedController>(*this); }

CascadeController::CascadeController(Mlp actor, const PidGainSet& velocity_gains, const ControllerConfig& cfg,
                                     const VelocityActionScale& scale)
    : actor_(std::move(actor)), gains_(velocity_gains), cfg_(cfg), scale_(scale), pid_(velocity_gains, cfg) {
  check_actor(actor_);
}

void CascadeController::reset() { pid_.reset(); }

ControllerCommand CascadeController::act(const ControlInput& input) {
  const VelocitySetpoint sp = action_to_velocity_setpoint(policy_action(actor_, input.obs), scale_);
  const QuadState measured = state_from_observation(input.obs, input.target);
  return ControllerCommand{command_to_action(pid_.step(measured, sp, input.dt)), std::nullopt};
}

std::unique_ptr<Controller> CascadeController::clone() const {
  auto c = std::make_unique<CascadeController>(actor_, gains_, cfg_, scale_);
  return c;
}

PosePidAgent::PosePidAgent(const PidGainSet& gains, const ControllerConfig& cfg)
    : gains_(gains), cfg_(cfg), pid_(gains, cfg) {}

void PosePidAgent::reset() {
  pid_.reset();
  traj_ = TrapezoidTrajectory{};
  traj_start_ = 0.0;
}

ControllerCommand PosePidAgent::act(const ControlInput& input) {
  const QuadState measured = state_from_observation(input.obs, input.target);
  if (input.new_waypoint) {
    Pose start;
    start << measured.position, measured.attitude.z();
    traj_ = make_trajectory(start, input.waypoint, gains_.traj_duration, gains_.traj_rise);
    traj_start_ = input.time;
  }
  const TrajectorySample sp = trajectory_eval(traj_, input.time - traj_start_);
  return ControllerCommand{command_to_action(pid_.step(measured, sp, input.dt)), std::nullopt};
}

std::unique_ptr<Controller> PosePidAgent::clone() const { return std::make_unique<PosePidAgent>(gains_, cfg_); }

ControllerCommand TeleportController::act(const ControlInput& input) {
  QuadState s;
  s.position = input.waypoint.head<3>();
  s.attitude.z() = input.waypoint[3];
  return ControllerCommand{nominal_hover_action(ControllerConfig{}), s};
}

std::unique_ptr<Controller> TeleportController::clone() const { return std::make_unique<TeleportController>(); }

ControllerCommand HoldController::act(const ControlInput& input) {
  if (!anchor_) {
    const QuadState seen = state_from_observation(input.obs, input.target);
    QuadState s;
    s.position = seen.position;
    s.attitude.z() = seen.attitude.z();
    anchor_ = s;
  }
  return ControllerCommand{nominal_hover_action(ControllerConfig{}), anchor_};
}

std::unique_ptr<Controller> HoldController::clone() const { return std::make_unique<HoldController>(); }

}  // namespace quadrl
