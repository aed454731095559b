#include <exception>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "CLI11.hpp"
#include "app.hpp"
#include "quadrl/envs.hpp"

namespace quadrl::app {

namespace {

const std::vector<std::string> kOnOff = {"on", "off"};

/// Defaults that differ between workflows; everything else comes from RunConfig.
RunConfig command_defaults(const std::string& command) {
  RunConfig c;
  c.command = command;
  if (command == "train") {
    c.episodes = 300;
  } else if (command == "eval-pickup" || command == "select-best") {
    c.disturbances.sensor_noise_std = CourseSpec{}.disturbances.sensor_noise_std;
    c.disturbances.motor_filter_enabled = CourseSpec{}.disturbances.motor_filter_enabled;
  }
  return c;
}

/// Flag values plus hooks that copy each explicitly given flag into a config.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* cmd, const std::string& name, const std::string& help,
                   std::function<void(RunConfig&, const T&)> apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = cmd->add_option(name, *value, help);
    hooks_.push_back([opt, value, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c, *value);
    });
    return opt;
  }

  CLI::Option* add_switch(CLI::App* cmd, const std::string& name, const std::string& help,
                          std::function<void(RunConfig&, bool)> apply) {
    return add<std::string>(cmd, name, help + " (on|off)",
                            [apply](RunConfig& c, const std::string& v) { apply(c, v == "on"); })
        ->check(CLI::IsMember(kOnOff));
  }

  void apply(RunConfig& c) const {
    for (const auto& h : hooks_) h(c);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> hooks_;
};

struct Command {
  CLI::App* app = nullptr;
  Overrides overrides;
  std::string config_file;
  std::string out_dir;
};

void add_common(Command& cmd) {
  CLI::App* a = cmd.app;
  a->add_option("--out", cmd.out_dir, "Run directory for all outputs")->required();
  a->add_option("--config", cmd.config_file, "JSON run config; explicit flags take precedence")
      ->check(CLI::ExistingFile);
  auto& o = cmd.overrides;
  o.add<std::uint64_t>(a, "--seed", "Master seed", [](RunConfig& c, const std::uint64_t& v) { c.seed = v; });
  o.add<int>(a, "--jobs", "Worker threads", [](RunConfig& c, const int& v) { c.jobs = v; })
      ->check(CLI::PositiveNumber);
  o.add<double>(a, "--noise", "Sensor noise standard deviation",
                [](RunConfig& c, const double& v) { c.disturbances.sensor_noise_std = v; });
  o.add_switch(a, "--motor-filter", "First-order motor response",
               [](RunConfig& c, bool v) { c.disturbances.motor_filter_enabled = v; });
  o.add<double>(a, "--diameter", "Fixed vehicle propeller diameter, in",
                [](RunConfig& c, const double& v) { c.vehicle.prop_diameter = v; });
  o.add<double>(a, "--pitch", "Fixed vehicle propeller pitch, in (0 = hover-calibrated)",
                [](RunConfig& c, const double& v) { c.vehicle.prop_pitch = v; });
  o.add<double>(a, "--arm", "Fixed vehicle arm length, m",
                [](RunConfig& c, const double& v) { c.vehicle.arm_length = v; });
  o.add<double>(a, "--hub", "Fixed vehicle hub radius, m",
                [](RunConfig& c, const double& v) { c.vehicle.hub_radius = v; });
  o.add<double>(a, "--mass", "Fixed vehicle mass, kg", [](RunConfig& c, const double& v) { c.vehicle.mass = v; });
}

void add_eval_options(Command& cmd) {
  CLI::App* a = cmd.app;
  auto& o = cmd.overrides;
  o.add<std::string>(a, "--controller", "pose-pid | learned | cascade | teleport | hold",
                     [](RunConfig& c, const std::string& v) { c.controller = parse_controller_kind(v); });
  o.add<std::string>(a, "--gains", "Gain file (pose gains for pose-pid, velocity gains for cascade)",
                     [](RunConfig& c, const std::string& v) { c.gains = v; });
  o.add<int>(a, "--episodes", "Episodes to run", [](RunConfig& c, const int& v) { c.episodes = v; });
  o.add<int>(a, "--target-successes", "Run until this many successes instead of a fixed count",
             [](RunConfig& c, const int& v) { c.target_successes = v; });
  o.add<int>(a, "--max-episodes", "Episode cap with --target-successes",
             [](RunConfig& c, const int& v) { c.max_episodes = v; });
  o.add<std::string>(a, "--vehicles", "fixed: the --diameter/--mass/... vehicle; test: sample the test range",
                     [](RunConfig& c, const std::string& v) { c.randomize = v == "test"; })
      ->check(CLI::IsMember({"fixed", "test"}));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadrotor simulation, PID tuning, SAC training and evaluation"};
  app.require_subcommand(1);

  Command tune, train, eval_wp, eval_pu, select;
  std::vector<std::string> checkpoints;
  std::string train_env = "waypoint";

  tune.app = app.add_subcommand("tune-pid", "Search PID gains with CMA-ES");
  add_common(tune);
  tune.overrides.add<std::string>(tune.app, "--stack", "pose | velocity",
                                  [](RunConfig& c, const std::string& v) { c.stack = v; })
      ->check(CLI::IsMember({"pose", "velocity"}));
  tune.overrides.add<int>(tune.app, "--iters", "CMA-ES generations",
                          [](RunConfig& c, const int& v) { c.iterations = v; });
  tune.overrides.add<int>(tune.app, "--batch", "Vehicles per fitness evaluation",
                          [](RunConfig& c, const int& v) { c.batch_size = v; });

  train.app = app.add_subcommand("train", "Train a SAC waypoint controller");
  add_common(train);
  {
    CLI::App* a = train.app;
    auto& o = train.overrides;
    a->add_option("--env", train_env, "Training task")->check(CLI::IsMember({"waypoint"}));
    o.add<std::string>(a, "--mode", "motor | velocity",
                       [](RunConfig& c, const std::string& v) { c.action_mode = v; })
        ->check(CLI::IsMember({"motor", "velocity"}));
    o.add_switch(a, "--randomize", "Per-episode vehicle randomization",
                 [](RunConfig& c, bool v) { c.randomize = v; });
    o.add<int>(a, "--episodes", "Training episodes", [](RunConfig& c, const int& v) { c.episodes = v; });
    o.add<int>(a, "--checkpoint-every", "Episodes between checkpoints (0 = final only)",
               [](RunConfig& c, const int& v) { c.checkpoint_every = v; });
    o.add<std::int64_t>(a, "--warmup", "Uniform random steps before the policy acts",
                        [](RunConfig& c, const std::int64_t& v) { c.sac.warmup_steps = v; });
    o.add<double>(a, "--initial-temperature", "Starting entropy temperature",
                  [](RunConfig& c, const double& v) { c.sac.initial_temperature = v; });
    o.add<int>(a, "--gradient-steps", "Gradient steps per episode",
               [](RunConfig& c, const int& v) { c.sac.gradient_steps = v; });
    o.add<std::string>(a, "--gains", "Velocity PID gain file for velocity mode",
                       [](RunConfig& c, const std::string& v) { c.gains = v; });
  }

  eval_wp.app = app.add_subcommand("eval-waypoint", "Evaluate a controller on the waypoint task");
  add_common(eval_wp);
  add_eval_options(eval_wp);
  eval_wp.overrides.add<std::string>(eval_wp.app, "--checkpoint", "SAC checkpoint for learned/cascade",
                                     [](RunConfig& c, const std::string& v) { c.checkpoint = v; });

  eval_pu.app = app.add_subcommand("eval-pickup", "Evaluate a controller on the payload course");
  add_common(eval_pu);
  add_eval_options(eval_pu);
  eval_pu.overrides.add<std::string>(eval_pu.app, "--checkpoint", "SAC checkpoint for learned/cascade",
                                     [](RunConfig& c, const std::string& v) { c.checkpoint = v; });

  select.app = app.add_subcommand("select-best", "Pick the checkpoint with the best payload-course success rate");
  add_common(select);
  add_eval_options(select);
  select.app->add_option("--checkpoints", checkpoints, "Candidate checkpoints")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Command* chosen = nullptr;
  for (Command* c : {&tune, &train, &eval_wp, &eval_pu, &select}) {
    if (c->app->parsed()) chosen = c;
  }
  const std::string name = chosen->app->get_name();

  RunConfig cfg;
  try {
    cfg = chosen->config_file.empty() ? command_defaults(name) : run_config_from_json(read_text_file(chosen->config_file));
    cfg.command = name;
    chosen->overrides.apply(cfg);
    cfg.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (name == "tune-pid") cmd_tune_pid(cfg, chosen->out_dir, out);
    if (name == "train") cmd_train(cfg, chosen->out_dir, out);
    if (name == "eval-waypoint") cmd_eval_waypoint(cfg, chosen->out_dir, out);
    if (name == "eval-pickup") cmd_eval_pickup(cfg, chosen->out_dir, out);
    if (name == "select-best") cmd_select_best(cfg, checkpoints, chosen->out_dir, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace quadrl::app
