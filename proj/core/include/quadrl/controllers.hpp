#pragma once

#include <memory>
#include <optional>
#include <string>

#include "quadrl/control.hpp"
#include "quadrl/envs.hpp"
#include "quadrl/neural.hpp"

namespace quadrl {

/// Deterministic action tanh(mean) of an actor network.
Vec4 policy_action(const Mlp& actor, const Observation& obs);

/// Actor output used directly as normalized rotor speeds.
class LearnedController : public Controller {
 public:
  explicit LearnedController(Mlp actor);
  void reset() override {}
  ControllerCommand act(const ControlInput& input) override;
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return "learned"; }

 private:
  Mlp actor_;
};

/// Actor output scaled to velocity/yaw-rate setpoints for a velocity PID.
class CascadeController : public Controller {
 public:
  CascadeController(Mlp actor, const PidGainSet& velocity_gains, const ControllerConfig& cfg = {},
                    const VelocityActionScale& scale = {});
  void reset() override;
  ControllerCommand act(const ControlInput& input) override;
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return "cascade"; }

 private:
  Mlp actor_;
  PidGainSet gains_;
  ControllerConfig cfg_;
  VelocityActionScale scale_;
  VelocityPidController pid_;
};

/// Pose PID tracking a trapezoidal trajectory that is rebuilt from the
/// estimated pose whenever a new waypoint is issued.
class PosePidAgent : public Controller {
 public:
  explicit PosePidAgent(const PidGainSet& gains, const ControllerConfig& cfg = {});
  void reset() override;
  ControllerCommand act(const ControlInput& input) override;
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return "pose-pid"; }

 private:
  PidGainSet gains_;
  ControllerConfig cfg_;
  PosePidController pid_;
  TrapezoidTrajectory traj_;
  double traj_start_ = 0.0;
};

/// Harness stub: jumps to the current waypoint, level and at rest, every step.
class TeleportController : public Controller {
 public:
  void reset() override {}
  ControllerCommand act(const ControlInput& input) override;
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return "teleport"; }
};

/// Harness stub: pins the vehicle, level and at rest, where the first
/// observation placed it.
class HoldController : public Controller {
 public:
  void reset() override { anchor_.reset(); }
  ControllerCommand act(const ControlInput& input) override;
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return "hold"; }

 private:
  std::optional<QuadState> anchor_;
};

}  // namespace quadrl
