#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "app.hpp"
#include "json.hpp"
#include "quadrl/controllers.hpp"
#include "quadrl/envs.hpp"
#include "quadrl/eval.hpp"
#include "quadrl/parallel.hpp"
#include "quadrl/sac.hpp"
#include "quadrl/tuning.hpp"

namespace quadrl::app {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr int kManifestSchema = 1;
constexpr int kHeatmapResolution = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Collects the files of one run directory and writes the manifest last.
class RunDir {
 public:
  RunDir(fs::path dir, const RunConfig& cfg) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    manifest_["schema_version"] = kManifestSchema;
    manifest_["command"] = cfg.command;
    manifest_["seed"] = cfg.seed;
    write("config.json", to_json(cfg));
  }

  const fs::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& text) {
    write_text_file(dir_ / name, text);
    record(name);
  }

  /// Registers a file written by other means (e.g. a checkpoint).
  void record(const std::string& name) { files_[name] = file_digest(dir_ / name); }

  Json& manifest() { return manifest_; }

  void finish() {
    Json files = Json::object();
    for (const auto& [name, digest] : files_) files[name] = digest;
    manifest_["files"] = files;
    write_text_file(dir_ / "manifest.json", manifest_.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  Json manifest_;
  std::map<std::string, std::string> files_;
};

void describe_checkpoint(Json& manifest, const std::string& path) {
  if (path.empty()) return;
  manifest["checkpoint"] = {{"path", path}, {"fnv1a", file_digest(path)}};
}

PidGainSet load_gains(const RunConfig& cfg, PidGainSet fallback) {
  if (cfg.gains.empty()) return fallback;
  return gains_from_json(read_text_file(cfg.gains));
}

std::unique_ptr<Controller> make_controller(const RunConfig& cfg) {
  switch (cfg.controller) {
    case ControllerKind::kPosePid:
      return std::make_unique<PosePidAgent>(load_gains(cfg, reference_pose_gains()));
    case ControllerKind::kLearned:
      return std::make_unique<LearnedController>(SacAgent::load_actor(cfg.checkpoint));
    case ControllerKind::kCascade:
      return std::make_unique<CascadeController>(SacAgent::load_actor(cfg.checkpoint),
                                                 load_gains(cfg, reference_velocity_gains()));
    case ControllerKind::kTeleport:
      return std::make_unique<TeleportController>();
    case ControllerKind::kHold:
      return std::make_unique<HoldController>();
  }
  throw std::invalid_argument("unknown controller");
}

void require_checkpoint(const RunConfig& cfg) {
  if (cfg.controller != ControllerKind::kLearned && cfg.controller != ControllerKind::kCascade) return;
  if (!fs::is_regular_file(cfg.checkpoint)) throw std::runtime_error("checkpoint not found: " + cfg.checkpoint);
}

// --- shared evaluation loop -------------------------------------------------

struct Trial {
  QuadParams params;
  QuadState spawn;
  std::uint64_t seed = 0;
};

/// Runs trials 0, 1, 2, ... in blocks of `jobs` until the episode budget or
/// the success target is met. Results are kept by index, so the stopping
/// point does not depend on thread timing.
std::vector<EpisodeRecord> run_trials(const RunConfig& cfg, const Controller& prototype,
                                      const std::function<Trial(std::uint64_t)>& make_trial,
                                      const std::function<EpisodeRecord(Controller&, const Trial&)>& run,
                                      std::ostream& log) {
  const bool until_target = cfg.target_successes > 0;
  const int budget = until_target ? cfg.max_episodes : cfg.episodes;
  std::vector<EpisodeRecord> records;
  int successes = 0;
  while (static_cast<int>(records.size()) < budget) {
    const int first = static_cast<int>(records.size());
    const int count = std::min(until_target ? cfg.jobs : budget - first, budget - first);
    std::vector<EpisodeRecord> block(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), cfg.jobs, [&](std::size_t k) {
      const std::uint64_t index = static_cast<std::uint64_t>(first) + k;
      const Trial trial = make_trial(index);
      std::unique_ptr<Controller> c = prototype.clone();
      c->reset();
      block[k] = run(*c, trial);
    });
    for (EpisodeRecord& rec : block) {
      successes += rec.success() ? 1 : 0;
      records.push_back(std::move(rec));
      if (until_target && successes >= cfg.target_successes) break;
    }
    if (until_target && successes >= cfg.target_successes) break;
  }
  log << "episodes " << records.size() << ", successes " << successes << "\n";
  return records;
}

void write_eval_outputs(RunDir& dir, const std::vector<EpisodeRecord>& records, TestTask task,
                        double heat_half_width, const std::string& label, const Vec3& steady_target) {
  std::ostringstream steps, summary, aggregate, expectation, heat_xy, heat_xz;
  write_steps_csv_header(steps);
  write_summary_csv_header(summary);
  std::vector<RunSummary> runs;
  std::vector<LabeledResult> labeled;
  for (std::size_t i = 0; i < records.size(); ++i) {
    write_steps_csv(steps, records[i], static_cast<int>(i));
    write_summary_csv(summary, records[i], static_cast<int>(i));
    runs.push_back(summarize_record(records[i], steady_target));
    labeled.push_back({records[i].params.prop_diameter, records[i].params.mass, records[i].success()});
  }
  write_aggregate_csv_header(aggregate);
  write_aggregate_csv(aggregate, summarize_runs(runs), label);
  MapSpec spec;
  spec.range = TestRange::for_task(task);
  write_expectation_csv(expectation, expectation_map(labeled, spec));
  write_heatmap_csv(heat_xy, heatmap(records, Plane::kXY, kHeatmapResolution, heat_half_width));
  write_heatmap_csv(heat_xz, heatmap(records, Plane::kXZ, kHeatmapResolution, heat_half_width));

  dir.write("steps.csv", steps.str());
  dir.write("summary.csv", summary.str());
  dir.write("aggregate.csv", aggregate.str());
  dir.write("expectation.csv", expectation.str());
  dir.write("heatmap_xy.csv", heat_xy.str());
  dir.write("heatmap_xz.csv", heat_xz.str());
}

/// Vehicle for trial `rng`: the configured one, or a draw from the test range.
QuadParams trial_vehicle(const RunConfig& cfg, TestTask task, std::mt19937_64& rng) {
  return cfg.randomize ? TestRange::for_task(task).sample(rng) : cfg.vehicle;
}

std::vector<EpisodeRecord> pickup_records(const RunConfig& cfg, const Controller& prototype, std::ostream& log) {
  CourseSpec spec;
  spec.disturbances = cfg.disturbances;
  spec.validate();
  return run_trials(
      cfg, prototype,
      [&](std::uint64_t i) {
        Trial t;
        t.seed = derive_seed(cfg.seed, i);
        std::mt19937_64 rng(t.seed);
        t.params = trial_vehicle(cfg, TestTask::kPickup, rng);
        t.spawn = sample_course_spawn(spec, rng);
        return t;
      },
      [&](Controller& c, const Trial& t) { return run_payload_course(c, t.params, t.spawn, spec, t.seed); }, log);
}

}  // namespace

void cmd_tune_pid(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  TuneConfig tc;
  tc.stack = cfg.stack == "velocity" ? PidStack::kVelocity : PidStack::kPose;
  tc.search = SearchSpec::for_stack(tc.stack);
  tc.search.iterations = cfg.iterations;
  tc.batch_size = cfg.batch_size;
  tc.seed = cfg.seed;
  tc.jobs = cfg.jobs;
  tc.pose.episode.disturbances = cfg.disturbances;
  tc.velocity.disturbances = cfg.disturbances;

  RunDir dir(out_dir, cfg);
  std::ostringstream csv;
  csv << "iteration,evaluations,best,median,best_so_far,sigma\n";
  const TuneResult result = tune_pid(tc, [&](const TuneIteration& it) {
    csv << it.iteration << ',' << it.evaluations << ',' << num(it.best) << ',' << num(it.median) << ','
        << num(it.best_so_far) << ',' << num(it.sigma) << '\n';
    if ((it.iteration + 1) % 10 == 0 || it.iteration == 0)
      log << "iteration " << it.iteration + 1 << " best " << num(it.best_so_far) << "\n";
  });
  dir.write("fitness.csv", csv.str());
  dir.write("gains.json", gains_to_json(result.best_gains));
  dir.manifest()["seeds"] = {{"batch", derive_seed(cfg.seed, 0)}, {"search", derive_seed(cfg.seed, 1)}};
  dir.manifest()["best_fitness"] = result.best_fitness;
  dir.finish();
  log << "best fitness " << num(result.best_fitness) << "\n";
}

void cmd_train(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  WaypointEnvConfig ec;
  ec.randomization.enabled = cfg.randomize;
  ec.randomization.fixed = cfg.vehicle;
  ec.disturbances = cfg.disturbances;
  ec.action_mode = cfg.action_mode == "velocity" ? ActionMode::kVelocity : ActionMode::kMotor;
  ec.velocity_gains = load_gains(cfg, reference_velocity_gains());
  WaypointEnv env(ec);
  SacTrainer trainer(cfg.sac, cfg.seed);

  RunDir dir(out_dir, cfg);
  fs::create_directories(dir.path() / "checkpoints");
  auto save = [&](const std::string& name) {
    const fs::path tmp = dir.path() / (name + ".tmp");
    trainer.agent().save(tmp);
    fs::rename(tmp, dir.path() / name);
    dir.record(name);
  };

  std::ostringstream csv;
  csv << "episode,return,steps,terminal,position_error,entropy,temperature,critic_loss,actor_loss\n";
  for (int e = 0; e < cfg.episodes; ++e) {
    const EpisodeMetrics m = trainer.train_episode(env);
    csv << m.episode + 1 << ',' << num(m.episode_return) << ',' << m.steps << ',' << (m.terminal ? 1 : 0) << ','
        << num(m.final_position_error) << ',' << num(m.entropy) << ',' << num(m.temperature) << ','
        << num(m.critic_loss) << ',' << num(m.actor_loss) << '\n';
    if (cfg.checkpoint_every > 0 && (e + 1) % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoints/episode_%06d.ckpt", e + 1);
      save(name);
    }
    if ((e + 1) % 10 == 0)
      log << "episode " << e + 1 << " return " << num(m.episode_return) << " error " << num(m.final_position_error)
          << "\n";
  }
  dir.write("training.csv", csv.str());
  save("final.ckpt");
  dir.manifest()["seeds"] = {{"trainer", cfg.seed}};
  dir.manifest()["env_steps"] = trainer.env_steps();
  dir.manifest()["checkpoint"] = {{"path", "final.ckpt"}, {"fnv1a", file_digest(dir.path() / "final.ckpt")}};
  dir.finish();
}

void cmd_eval_waypoint(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  require_checkpoint(cfg);
  const std::unique_ptr<Controller> prototype = make_controller(cfg);
  WaypointEvalConfig wc;
  wc.disturbances = cfg.disturbances;
  wc.validate();

  RunDir dir(out_dir, cfg);
  const std::vector<EpisodeRecord> records = run_trials(
      cfg, *prototype,
      [&](std::uint64_t i) {
        Trial t;
        t.seed = derive_seed(cfg.seed, i);
        std::mt19937_64 rng(t.seed);
        t.params = trial_vehicle(cfg, TestTask::kWaypoint, rng);
        t.spawn = sample_waypoint_spawn(wc.spawn, rng);
        return t;
      },
      [&](Controller& c, const Trial& t) { return run_waypoint_episode(c, t.params, t.spawn, wc, t.seed); }, log);
  write_eval_outputs(dir, records, TestTask::kWaypoint, wc.arena_half_width, controller_kind_name(cfg.controller),
                     Vec3::Zero());
  dir.manifest()["seeds"] = {{"master", cfg.seed}, {"episode_rule", "derive_seed(master, index)"}};
  describe_checkpoint(dir.manifest(), cfg.checkpoint);
  dir.finish();
}

void cmd_eval_pickup(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  require_checkpoint(cfg);
  const std::unique_ptr<Controller> prototype = make_controller(cfg);
  RunDir dir(out_dir, cfg);
  const std::vector<EpisodeRecord> records = pickup_records(cfg, *prototype, log);
  // Steady errors are measured at the final waypoint of the course.
  write_eval_outputs(dir, records, TestTask::kPickup, CourseSpec{}.arena_half_width,
                     controller_kind_name(cfg.controller), CourseSpec{}.waypoints().back());
  dir.manifest()["seeds"] = {{"master", cfg.seed}, {"episode_rule", "derive_seed(master, index)"}};
  describe_checkpoint(dir.manifest(), cfg.checkpoint);
  dir.finish();
}

void cmd_select_best(const RunConfig& cfg, const std::vector<std::string>& checkpoints, const fs::path& out_dir,
                     std::ostream& log) {
  if (checkpoints.empty()) throw std::invalid_argument("select-best: no checkpoints given");
  if (cfg.controller != ControllerKind::kLearned && cfg.controller != ControllerKind::kCascade)
    throw std::invalid_argument("select-best: controller must be learned or cascade");
  RunDir dir(out_dir, cfg);
  std::ostringstream csv;
  csv << "checkpoint,fnv1a,episodes,successes,success_rate\n";
  int best = -1;
  double best_rate = -1.0;
  Json scored = Json::array();
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    RunConfig c = cfg;
    c.checkpoint = checkpoints[k];
    c.command = "eval-pickup";
    c.validate();
    require_checkpoint(c);
    const std::unique_ptr<Controller> prototype = make_controller(c);
    log << checkpoints[k] << ": ";
    const std::vector<EpisodeRecord> records = pickup_records(c, *prototype, log);
    const auto successes = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.success(); });
    const double rate = static_cast<double>(successes) / static_cast<double>(records.size());
    const std::string digest = file_digest(checkpoints[k]);
    csv << checkpoints[k] << ',' << digest << ',' << records.size() << ',' << successes << ',' << num(rate) << '\n';
    scored.push_back({{"path", checkpoints[k]}, {"fnv1a", digest}});
    if (rate > best_rate) {
      best_rate = rate;
      best = static_cast<int>(k);
    }
  }
  dir.write("selection.csv", csv.str());
  dir.write("best.txt", checkpoints[static_cast<std::size_t>(best)] + "\n");
  dir.manifest()["checkpoints"] = scored;
  dir.manifest()["best"] = checkpoints[static_cast<std::size_t>(best)];
  dir.finish();
  log << "best " << checkpoints[static_cast<std::size_t>(best)] << " success rate " << num(best_rate) << "\n";
}

}  // namespace quadrl::app
