#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "app.hpp"
#include "json.hpp"

namespace {

using namespace quadrl;
namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "quadrl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = app::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "quadrl_cli_test" / name;
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(cli({}).code, app::kExitUsage);
  EXPECT_EQ(cli({"fly"}).code, app::kExitUsage);
  EXPECT_EQ(cli({"eval-pickup"}).code, app::kExitUsage);  // --out is required
  EXPECT_EQ(cli({"eval-pickup", "--out", fresh_dir("u").string(), "--controller", "magic"}).code,
            app::kExitUsage);
  EXPECT_EQ(cli({"eval-pickup", "--out", fresh_dir("u").string(), "--controller", "learned"}).code,
            app::kExitUsage);
  EXPECT_EQ(cli({"train", "--out", fresh_dir("u").string(), "--mode", "torque"}).code, app::kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, app::kExitOk);
}

TEST(Cli, MissingCheckpointIsARuntimeFailure) {
  const Result r = cli({"eval-waypoint", "--out", fresh_dir("missing").string(), "--controller", "cascade",
                        "--checkpoint", "/nonexistent/final.ckpt"});
  EXPECT_EQ(r.code, app::kExitRuntime);
  EXPECT_NE(r.err.find("checkpoint"), std::string::npos);
}

TEST(Cli, TeleportStubCompletesEveryPickupCourse) {
  const fs::path dir = fresh_dir("teleport");
  ASSERT_EQ(cli({"eval-pickup", "--controller", "teleport", "--episodes", "100", "--out", dir.string()}).code, 0);
  const auto summary = lines(slurp(dir / "summary.csv"));
  ASSERT_EQ(summary.size(), 101u);
  for (std::size_t i = 1; i < summary.size(); ++i) EXPECT_NE(summary[i].find(",success,"), std::string::npos);
  const auto aggregate = lines(slurp(dir / "aggregate.csv"));
  ASSERT_GE(aggregate.size(), 2u);
  EXPECT_EQ(aggregate[1].rfind("teleport,100,100,1,", 0), 0u) << aggregate[1];
}

TEST(Cli, RunDirectoryHoldsConfigAndManifest) {
  const fs::path dir = fresh_dir("manifest");
  ASSERT_EQ(cli({"eval-waypoint", "--controller", "pose-pid", "--episodes", "3", "--seed", "9", "--vehicles",
                 "fixed", "--out", dir.string()})
                .code,
            0);
  for (const char* f : {"config.json", "manifest.json", "steps.csv", "summary.csv", "aggregate.csv",
                        "expectation.csv", "heatmap_xy.csv", "heatmap_xz.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["schema_version"], 1);
  EXPECT_EQ(manifest["seed"], 9);
  EXPECT_EQ(manifest["command"], "eval-waypoint");
  EXPECT_EQ(manifest["files"]["steps.csv"], file_digest(dir / "steps.csv"));
  EXPECT_EQ(manifest["files"].size(), 7u);

  // The snapshot re-runs the same experiment.
  const fs::path again = fresh_dir("manifest_again");
  ASSERT_EQ(cli({"eval-waypoint", "--config", (dir / "config.json").string(), "--out", again.string()}).code, 0);
  for (const char* f : {"steps.csv", "summary.csv", "aggregate.csv", "config.json"}) {
    EXPECT_EQ(slurp(dir / f), slurp(again / f)) << f;
  }
}

TEST(Cli, FlagsOverrideConfigFile) {
  const fs::path cfg = fresh_dir("override_cfg");
  fs::create_directories(cfg);
  write_text_file(cfg / "run.json", R"({"controller": "hold", "episodes": 4, "seed": 2})");
  const fs::path dir = fresh_dir("override");
  ASSERT_EQ(cli({"eval-pickup", "--config", (cfg / "run.json").string(), "--episodes", "2", "--out", dir.string()})
                .code,
            0);
  const RunConfig snap = run_config_from_json(slurp(dir / "config.json"));
  EXPECT_EQ(snap.controller, ControllerKind::kHold);
  EXPECT_EQ(snap.episodes, 2);
  EXPECT_EQ(snap.seed, 2u);
  EXPECT_EQ(lines(slurp(dir / "summary.csv")).size(), 3u);
}

TEST(Cli, TargetSuccessesStopsAtTheTarget) {
  const fs::path a = fresh_dir("target_a"), b = fresh_dir("target_b");
  const std::vector<std::string> base = {"eval-pickup", "--controller", "teleport", "--target-successes", "7"};
  auto with = [&](const fs::path& d, const std::string& jobs) {
    auto args = base;
    args.insert(args.end(), {"--jobs", jobs, "--out", d.string()});
    return cli(args).code;
  };
  ASSERT_EQ(with(a, "1"), 0);
  ASSERT_EQ(with(b, "3"), 0);
  EXPECT_EQ(lines(slurp(a / "summary.csv")).size(), 8u);
  EXPECT_EQ(slurp(a / "steps.csv"), slurp(b / "steps.csv"));
}

TEST(Cli, EvaluationIsIndependentOfWorkerCount) {
  const fs::path a = fresh_dir("jobs_a"), b = fresh_dir("jobs_b");
  const std::vector<std::string> base = {"eval-pickup", "--controller", "pose-pid", "--episodes", "4", "--seed", "5"};
  auto a_args = base, b_args = base;
  a_args.insert(a_args.end(), {"--jobs", "1", "--out", a.string()});
  b_args.insert(b_args.end(), {"--jobs", "4", "--out", b.string()});
  ASSERT_EQ(cli(a_args).code, 0);
  ASSERT_EQ(cli(b_args).code, 0);
  for (const char* f : {"steps.csv", "summary.csv", "aggregate.csv", "expectation.csv", "heatmap_xy.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Cli, TunePidWritesLoadableGains) {
  const fs::path dir = fresh_dir("tune");
  ASSERT_EQ(cli({"tune-pid", "--stack", "velocity", "--iters", "2", "--batch", "2", "--seed", "3", "--out",
                 dir.string()})
                .code,
            0);
  const auto fitness = lines(slurp(dir / "fitness.csv"));
  ASSERT_EQ(fitness.size(), 3u);
  EXPECT_EQ(fitness[0], "iteration,evaluations,best,median,best_so_far,sigma");
  EXPECT_NO_THROW(gains_from_json(slurp(dir / "gains.json")));

  // The tuned file plugs straight into evaluation.
  const fs::path eval = fresh_dir("tune_eval");
  EXPECT_EQ(cli({"eval-waypoint", "--controller", "pose-pid", "--gains", (dir / "gains.json").string(), "--episodes",
                 "1", "--out", eval.string()})
                .code,
            0);
}

TEST(Cli, TrainWritesCurveAndCheckpointsThatEvaluate) {
  const fs::path dir = fresh_dir("train");
  ASSERT_EQ(cli({"train", "--episodes", "4", "--checkpoint-every", "2", "--seed", "1", "--out", dir.string()}).code,
            0);
  const auto curve = lines(slurp(dir / "training.csv"));
  ASSERT_EQ(curve.size(), 5u);
  EXPECT_EQ(curve[0], "episode,return,steps,terminal,position_error,entropy,temperature,critic_loss,actor_loss");
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "episode_000002.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "episode_000004.ckpt"));
  ASSERT_TRUE(fs::exists(dir / "final.ckpt"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["checkpoint"]["fnv1a"], file_digest(dir / "final.ckpt"));

  const fs::path sel = fresh_dir("select");
  ASSERT_EQ(cli({"select-best", "--controller", "learned", "--episodes", "2", "--checkpoints",
                 (dir / "checkpoints" / "episode_000002.ckpt").string(), (dir / "final.ckpt").string(), "--out",
                 sel.string()})
                .code,
            0);
  EXPECT_EQ(lines(slurp(sel / "selection.csv")).size(), 3u);
  EXPECT_TRUE(fs::exists(sel / "best.txt"));
}

}  // namespace
