#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "quadrl/control.hpp"
#include "quadrl/dynamics.hpp"
#include "quadrl/sac.hpp"

namespace quadrl {

enum class ControllerKind { kPosePid, kLearned, kCascade, kTeleport, kHold };

ControllerKind parse_controller_kind(const std::string& name);
std::string controller_kind_name(ControllerKind kind);

/// Everything needed to re-run one CLI workflow. Serialized into every run
/// directory; any key missing from a config file keeps its default.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  int jobs = 1;

  // Vehicles: randomized per episode, or this fixed vehicle.
  bool randomize = true;
  QuadParams vehicle = nominal_params();

  DisturbanceConfig disturbances;  // seed is ignored; episodes derive their own

  // Controller under test (evaluation) or being trained.
  ControllerKind controller = ControllerKind::kPosePid;
  std::string checkpoint;  // SAC checkpoint for learned / cascade
  std::string gains;       // gain file; empty means the reference gains
  std::string action_mode = "motor";  // training: motor | velocity

  // Budgets.
  int episodes = 100;
  int target_successes = 0;  // > 0: keep evaluating until this many successes
  int max_episodes = 1000;   // cap when target_successes is set
  int iterations = 1000;
  int batch_size = 100;
  int checkpoint_every = 50;
  std::string stack = "pose";  // tune-pid: pose | velocity

  SacConfig sac;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

std::string to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

std::string gains_to_json(const PidGainSet& gains);
PidGainSet gains_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace quadrl
