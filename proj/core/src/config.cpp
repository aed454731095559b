#include "quadrl/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace quadrl {

namespace {

using Json = nlohmann::ordered_json;

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json pid_json(const PidGains& g) { return Json{{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}}; }

PidGains pid_from(const Json& j, const std::string& where) {
  reject_unknown(j, {"kp", "ki", "kd"}, where);
  PidGains g;
  read_opt(j, "kp", g.kp);
  read_opt(j, "ki", g.ki);
  read_opt(j, "kd", g.kd);
  return g;
}

}  // namespace

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "pose-pid") return ControllerKind::kPosePid;
  if (name == "learned") return ControllerKind::kLearned;
  if (name == "cascade") return ControllerKind::kCascade;
  if (name == "teleport") return ControllerKind::kTeleport;
  if (name == "hold") return ControllerKind::kHold;
  throw std::invalid_argument("unknown controller '" + name + "' (pose-pid|learned|cascade|teleport|hold)");
}

std::string controller_kind_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kPosePid: return "pose-pid";
    case ControllerKind::kLearned: return "learned";
    case ControllerKind::kCascade: return "cascade";
    case ControllerKind::kTeleport: return "teleport";
    case ControllerKind::kHold: return "hold";
  }
  return "unknown";
}

void RunConfig::validate() const {
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  vehicle.validate();
  disturbances.validate();
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (target_successes < 0) throw std::invalid_argument("target_successes must be >= 0");
  if (target_successes > 0 && max_episodes < target_successes)
    throw std::invalid_argument("max_episodes must be >= target_successes");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  if (action_mode != "motor" && action_mode != "velocity")
    throw std::invalid_argument("action_mode must be motor or velocity");
  if (stack != "pose" && stack != "velocity") throw std::invalid_argument("stack must be pose or velocity");
  if ((controller == ControllerKind::kLearned || controller == ControllerKind::kCascade) && checkpoint.empty() &&
      command.rfind("eval", 0) == 0)
    throw std::invalid_argument(controller_kind_name(controller) + " controller needs a checkpoint");
  if (sac.hidden.empty()) throw std::invalid_argument("sac.hidden must not be empty");
  if (sac.batch_size < 1 || sac.gradient_steps < 0 || sac.warmup_steps < 0 || sac.buffer_capacity < 1)
    throw std::invalid_argument("sac: bad budget");
  if (!(sac.initial_temperature > 0.0)) throw std::invalid_argument("sac.initial_temperature must be > 0");
}

std::string to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["randomize"] = c.randomize;
  j["vehicle"] = {{"prop_diameter", c.vehicle.prop_diameter}, {"prop_pitch", c.vehicle.prop_pitch},
                  {"arm_length", c.vehicle.arm_length},       {"hub_radius", c.vehicle.hub_radius},
                  {"mass", c.vehicle.mass}};
  j["disturbances"] = {{"sensor_noise_std", c.disturbances.sensor_noise_std},
                       {"motor_filter", c.disturbances.motor_filter_enabled}};
  j["controller"] = controller_kind_name(c.controller);
  j["checkpoint"] = c.checkpoint;
  j["gains"] = c.gains;
  j["action_mode"] = c.action_mode;
  j["episodes"] = c.episodes;
  j["target_successes"] = c.target_successes;
  j["max_episodes"] = c.max_episodes;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["checkpoint_every"] = c.checkpoint_every;
  j["stack"] = c.stack;
  j["sac"] = {{"hidden", c.sac.hidden},
              {"gamma", c.sac.gamma},
              {"polyak_tau", c.sac.polyak_tau},
              {"batch_size", c.sac.batch_size},
              {"gradient_steps", c.sac.gradient_steps},
              {"actor_lr", c.sac.actor_lr},
              {"critic_lr", c.sac.critic_lr},
              {"temperature_lr", c.sac.temperature_lr},
              {"target_entropy", c.sac.target_entropy},
              {"initial_temperature", c.sac.initial_temperature},
              {"buffer_capacity", c.sac.buffer_capacity},
              {"warmup_steps", c.sac.warmup_steps}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  RunConfig c;
  try {
    reject_unknown(j,
                   {"command", "seed", "jobs", "randomize", "vehicle", "disturbances", "controller", "checkpoint",
                    "gains", "action_mode", "episodes", "target_successes", "max_episodes", "iterations",
                    "batch_size", "checkpoint_every", "stack", "sac"},
                   "config");
    read_opt(j, "command", c.command);
    read_opt(j, "seed", c.seed);
    read_opt(j, "jobs", c.jobs);
    read_opt(j, "randomize", c.randomize);
    if (j.contains("vehicle")) {
      const Json& v = j["vehicle"];
      reject_unknown(v, {"prop_diameter", "prop_pitch", "arm_length", "hub_radius", "mass"}, "config.vehicle");
      read_opt(v, "prop_diameter", c.vehicle.prop_diameter);
      read_opt(v, "prop_pitch", c.vehicle.prop_pitch);
      read_opt(v, "arm_length", c.vehicle.arm_length);
      read_opt(v, "hub_radius", c.vehicle.hub_radius);
      read_opt(v, "mass", c.vehicle.mass);
    }
    if (j.contains("disturbances")) {
      const Json& d = j["disturbances"];
      reject_unknown(d, {"sensor_noise_std", "motor_filter"}, "config.disturbances");
      read_opt(d, "sensor_noise_std", c.disturbances.sensor_noise_std);
      read_opt(d, "motor_filter", c.disturbances.motor_filter_enabled);
    }
    if (j.contains("controller")) c.controller = parse_controller_kind(j["controller"].get<std::string>());
    read_opt(j, "checkpoint", c.checkpoint);
    read_opt(j, "gains", c.gains);
    read_opt(j, "action_mode", c.action_mode);
    read_opt(j, "episodes", c.episodes);
    read_opt(j, "target_successes", c.target_successes);
    read_opt(j, "max_episodes", c.max_episodes);
    read_opt(j, "iterations", c.iterations);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "checkpoint_every", c.checkpoint_every);
    read_opt(j, "stack", c.stack);
    if (j.contains("sac")) {
      const Json& s = j["sac"];
      reject_unknown(s,
                     {"hidden", "gamma", "polyak_tau", "batch_size", "gradient_steps", "actor_lr", "critic_lr",
                      "temperature_lr", "target_entropy", "initial_temperature", "buffer_capacity", "warmup_steps"},
                     "config.sac");
      read_opt(s, "hidden", c.sac.hidden);
      read_opt(s, "gamma", c.sac.gamma);
      read_opt(s, "polyak_tau", c.sac.polyak_tau);
      read_opt(s, "batch_size", c.sac.batch_size);
      read_opt(s, "gradient_steps", c.sac.gradient_steps);
      read_opt(s, "actor_lr", c.sac.actor_lr);
      read_opt(s, "critic_lr", c.sac.critic_lr);
      read_opt(s, "temperature_lr", c.sac.temperature_lr);
      read_opt(s, "target_entropy", c.sac.target_entropy);
      read_opt(s, "initial_temperature", c.sac.initial_temperature);
      read_opt(s, "buffer_capacity", c.sac.buffer_capacity);
      read_opt(s, "warmup_steps", c.sac.warmup_steps);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

std::string gains_to_json(const PidGainSet& g) {
  Json j;
  j["xy"] = pid_json(g.xy);
  j["z"] = pid_json(g.z);
  j["roll_pitch"] = pid_json(g.roll_pitch);
  j["yaw"] = pid_json(g.yaw);
  j["traj_duration"] = g.traj_duration;
  j["traj_rise"] = g.traj_rise;
  return j.dump(2) + "\n";
}

PidGainSet gains_from_json(const std::string& text) {
  PidGainSet g;
  try {
    const Json j = Json::parse(text);
    reject_unknown(j, {"xy", "z", "roll_pitch", "yaw", "traj_duration", "traj_rise"}, "gains");
    if (j.contains("xy")) g.xy = pid_from(j["xy"], "gains.xy");
    if (j.contains("z")) g.z = pid_from(j["z"], "gains.z");
    if (j.contains("roll_pitch")) g.roll_pitch = pid_from(j["roll_pitch"], "gains.roll_pitch");
    if (j.contains("yaw")) g.yaw = pid_from(j["yaw"], "gains.yaw");
    read_opt(j, "traj_duration", g.traj_duration);
    read_opt(j, "traj_rise", g.traj_rise);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("gains: ") + e.what());
  }
  g.validate();
  return g;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string file_digest(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace quadrl
