#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "quadrl/config.hpp"

namespace quadrl::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses argv, runs one subcommand and maps failures to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Each command writes its artifacts plus config.json and manifest.json into
// `out_dir` (created if needed). Invalid settings throw std::invalid_argument.
void cmd_tune_pid(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_eval_waypoint(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_eval_pickup(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
/// Scores every checkpoint on the payload course and records the one with
/// the highest success rate (earliest listed wins ties).
void cmd_select_best(const RunConfig& cfg, const std::vector<std::string>& checkpoints,
                     const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace quadrl::app
