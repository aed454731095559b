// Acceptance checks. Each criterion runs on its own (`--criterion N`) and
// prints one PASS/FAIL line; the exit status is 0 only on PASS.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "quadrl/cmaes.hpp"
#include "quadrl/controllers.hpp"
#include "quadrl/dynamics.hpp"
#include "quadrl/envs.hpp"
#include "quadrl/eval.hpp"
#include "quadrl/neural.hpp"
#include "quadrl/sac.hpp"
#include "quadrl/tuning.hpp"

namespace {

using namespace quadrl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

MotorSpeeds uniform_speeds(double rpm) { return MotorSpeeds{Vec4::Constant(rpm)}; }

QuadState simulate(QuadState s, const QuadParams& p, const ModelConfig& m, const MotorSpeeds& u, double dt,
                   int steps) {
  for (int i = 0; i < steps; ++i) s = integrate_step(s, p, m, u, dt);
  return s;
}

// 1 -------------------------------------------------------------------------
void dynamics_oracles(Verdict& v) {
  const auto t0 = Clock::now();
  const QuadParams p = nominal_params();

  // Free fall for 1 s: 40 control periods of 25 ms.
  const QuadState fall = simulate(QuadState{}, p, ModelConfig{}, uniform_speeds(0.0), 0.025, 40);
  const double expected = 0.5 * 9.81 * 1.0 * 1.0;
  const double rel = std::abs(-fall.position.z() - expected) / expected;
  v.require(rel < 1e-6, "free-fall relative error " + fmt(rel));

  // Hover for 5 s.
  const QuadState hover = simulate(QuadState{}, p, ModelConfig{}, uniform_speeds(hover_rpm(p)), 0.025, 200);
  v.require(hover.position.norm() < 1e-3, "hover drift " + fmt(hover.position.norm()));

  // Reflection across the body X axis: y, roll, yaw and the X/Z rates flip;
  // rotors 1 and 3 swap and every spin direction reverses.
  QuadState s;
  s.nu = Vec3(0.3, -0.2, 0.1);
  s.omega = Vec3(0.4, -0.3, 0.2);
  s.position = Vec3(0.2, 0.5, -0.1);
  s.attitude = Vec3(0.1, -0.15, 0.6);
  const MotorSpeeds u{Vec4(5600, 5100, 5300, 5450)};
  QuadState m = s;
  m.nu.y() *= -1;
  m.omega.x() *= -1;
  m.omega.z() *= -1;
  m.position.y() *= -1;
  m.attitude.x() *= -1;
  m.attitude.z() *= -1;
  const MotorSpeeds mu{Vec4(u.rpm[2], u.rpm[1], u.rpm[0], u.rpm[3])};
  ModelConfig mirrored_model;
  mirrored_model.yaw_drag_coeff = -ModelConfig{}.yaw_drag_coeff;
  const QuadState a = simulate(s, p, ModelConfig{}, u, 0.025, 40);
  const QuadState b = simulate(m, p, mirrored_model, mu, 0.025, 40);
  const Vec3 flip_pos(1, -1, 1), flip_att(-1, 1, -1), flip_rate(-1, 1, -1);
  double worst = 0.0;
  worst = std::max(worst, (a.position - b.position.cwiseProduct(flip_pos)).cwiseAbs().maxCoeff());
  worst = std::max(worst, (a.nu - b.nu.cwiseProduct(flip_pos)).cwiseAbs().maxCoeff());
  worst = std::max(worst, (a.attitude - b.attitude.cwiseProduct(flip_att)).cwiseAbs().maxCoeff());
  worst = std::max(worst, (a.omega - b.omega.cwiseProduct(flip_rate)).cwiseAbs().maxCoeff());
  v.require(worst < 1e-9, "mirror mismatch " + fmt(worst));

  const double t = seconds_since(t0);
  v.require(t < 10.0, "runtime " + fmt(t) + " s");
  v.detail << "free-fall rel " << fmt(rel) << ", hover drift " << fmt(hover.position.norm()) << " m, mirror "
           << fmt(worst) << ", " << fmt(t) << " s";
}

// 2 -------------------------------------------------------------------------
ControlVector cv(double t, double r, double p, double y) {
  ControlVector c;
  c.delta = Vec4(t, r, p, y);
  return c;
}

void allocation(Verdict& v) {
  v.require(allocate(cv(1, 0, 0, 0)) == Vec4(1, 1, 1, 1), "throttle column");
  v.require(allocate(cv(0, 1, 0, 0)) == Vec4(1, 0, -1, 0), "roll column");
  v.require(allocate(cv(0, 0, 1, 0)) == Vec4(0, 1, 0, -1), "pitch column");
  v.require(allocate(cv(0, 0, 0, 1)) == Vec4(1, -1, 1, -1), "yaw column");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  double lin = 0.0, inv = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ControlVector d1 = cv(u(rng), u(rng), u(rng), u(rng));
    const ControlVector d2 = cv(u(rng), u(rng), u(rng), u(rng));
    const double a = u(rng), b = u(rng);
    ControlVector mix;
    mix.delta = a * d1.delta + b * d2.delta;
    lin = std::max(lin, (allocate(mix) - (a * allocate(d1) + b * allocate(d2))).cwiseAbs().maxCoeff());
    inv = std::max(inv, (allocation_inverse() * allocate(d1) - d1.delta).cwiseAbs().maxCoeff());
  }
  v.require(lin < 1e-12, "linearity " + fmt(lin));
  v.require(inv < 1e-12, "round trip " + fmt(inv));
  v.detail << "columns exact, linearity " << fmt(lin) << ", round trip " << fmt(inv);
}

// 3 -------------------------------------------------------------------------
QuadState at(const Vec3& position, const Vec3& attitude = Vec3::Zero()) {
  QuadState s;
  s.position = position;
  s.attitude = attitude;
  return s;
}

void reward_points(Verdict& v) {
  const double r0 = waypoint_reward(at(Vec3::Zero()), Pose::Zero());
  const double r1 = waypoint_reward(at(Vec3(1, 0, 0)), Pose::Zero());
  const double r2 = waypoint_reward(at(Vec3::Zero(), Vec3(0, 0, 0.5)), Pose::Zero());
  v.require(std::abs(r0 - 0.0) <= 1e-12, "at target " + fmt(r0));
  v.require(std::abs(r1 + 1.0) <= 1e-12, "1 m off " + fmt(r1));
  v.require(std::abs(r2 + 0.25) <= 1e-12, "0.5 rad yaw " + fmt(r2));
  v.detail << "r = " << fmt(r0) << ", " << fmt(r1) << ", " << fmt(r2);
}

// 4 -------------------------------------------------------------------------
void soft_clip_points(Verdict& v) {
  const double a = soft_clip(100.0), b = soft_clip(200.0), c = soft_clip(300.0);
  v.require(a == 100.0, "e=100 -> " + fmt(a));
  v.require(b == 200.0, "e=200 -> " + fmt(b));
  v.require(c == 210.0, "e=300 -> " + fmt(c));
  v.detail << "100->" << fmt(a) << ", 200->" << fmt(b) << ", 300->" << fmt(c);
}

// 5 -------------------------------------------------------------------------
double weighted_loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
  return (net.forward(x).array() * g.array()).sum();
}

void gradients(Verdict& v) {
  const auto t0 = Clock::now();
  const std::vector<std::vector<HeadSpec>> layouts = {
      {{2, Activation::kLinear}},
      {{2, Activation::kTanh}},
      {{2, Activation::kScaledSigmoid, -9.0, 2.0}},
      {{1, Activation::kTanh}, {1, Activation::kScaledSigmoid, -9.0, 2.0}},
  };
  double worst = 0.0;
  long checked = 0;
  for (const auto& heads : layouts) {
    std::mt19937_64 rng(123);
    Mlp net({3, 8, 8, 2}, heads, rng);
    std::normal_distribution<double> n(0, 1);
    Eigen::MatrixXd x(3, 5), g(2, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
    Mlp::Cache cache;
    net.forward(x, cache);
    Eigen::VectorXd grad;
    net.backward(cache, g, &grad, nullptr);
    const double h = 1e-5;
    for (Eigen::Index p = 0; p < net.num_params(); ++p) {
      Mlp plus = net, minus = net;
      plus.params()[p] += h;
      minus.params()[p] -= h;
      const double fd = (weighted_loss(plus, x, g) - weighted_loss(minus, x, g)) / (2 * h);
      const double rel = std::abs(grad[p] - fd) / std::max(std::abs(grad[p]) + std::abs(fd), 1e-7);
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  const double t = seconds_since(t0);
  v.require(worst < 1e-4, "worst relative error " + fmt(worst));
  v.require(t < 30.0, "runtime " + fmt(t) + " s");
  v.detail << checked << " parameters, worst relative error " << fmt(worst) << ", " << fmt(t) << " s";
}

// 6 -------------------------------------------------------------------------
/// Log-probs on a dyadic grid, shifted so that -mean equals `entropy` exactly.
Eigen::VectorXd log_probs_with_entropy(const Eigen::VectorXd& raw, double entropy) {
  const double grid = std::ldexp(1.0, -20);
  Eigen::VectorXd q = (raw / grid).array().round() * grid;
  q.array() -= q.mean();
  q.array() -= entropy;
  return q;
}

void temperature_contract(Verdict& v) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> n(0.0, 1.0);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SacConfig cfg;
    cfg.hidden = {64, 64};
    cfg.initial_temperature = std::exp(std::uniform_real_distribution<double>(-3, 1)(rng));
    SacAgent base(cfg, 1000 + static_cast<std::uint64_t>(trial));
    Eigen::MatrixXd obs(kObsDim, 256);
    for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = n(rng);
    const PolicySample ps = base.sample(obs, rng, SampleMode::kStochastic);
    const double h = cfg.target_entropy;
    for (const auto& [offset, sign] : std::vector<std::pair<double, int>>{{0, 0}, {-1, 1}, {1, -1}}) {
      const Eigen::VectorXd lp = log_probs_with_entropy(ps.log_prob, h + offset);
      SacAgent agent = base;
      const double before = agent.temperature();
      const double after = agent.temperature_update(lp);
      const bool ok = -lp.mean() == h + offset &&
                      (sign == 0 ? after == before : sign > 0 ? after > before : after < before);
      if (!ok) ++violations;
    }
  }
  v.require(violations == 0, std::to_string(violations) + " violations");
  v.detail << "100 network states x 3 entropy levels, " << violations << " violations";
}

// 7 -------------------------------------------------------------------------
void cmaes_sanity(Verdict& v) {
  Cmaes es(Eigen::VectorXd::Constant(10, 1.0), 0.5, 1);
  while (es.evaluations() < 3000 && !(es.best_fitness() < 1e-8)) {
    const auto& pop = es.ask();
    std::vector<double> fit;
    for (const auto& x : pop) fit.push_back(x.squaredNorm());
    es.tell(fit);
  }
  v.require(es.best_fitness() < 1e-8, "sphere best " + fmt(es.best_fitness()));

  const SearchSpec spec = SearchSpec::pose();
  const Eigen::VectorXd lo = constrain(Eigen::VectorXd::Constant(spec.dim(), -kPi / 2), spec);
  const Eigen::VectorXd mid = constrain(Eigen::VectorXd::Zero(spec.dim()), spec);
  const Eigen::VectorXd hi = constrain(Eigen::VectorXd::Constant(spec.dim(), kPi / 2), spec);
  v.require(lo == spec.lower, "constrain(-pi/2) != lower");
  v.require(mid == (spec.lower + spec.upper) / 2.0, "constrain(0) != midpoint");
  v.require(hi == spec.upper, "constrain(pi/2) != upper");
  v.detail << "sphere " << fmt(es.best_fitness()) << " after " << es.evaluations() << " evaluations";
}

// 8 -------------------------------------------------------------------------
void pid_baseline(Verdict& v) {
  const auto t0 = Clock::now();
  const PidGainSet gains = reference_pose_gains();
  const WaypointEvalConfig cfg;
  std::vector<RunSummary> runs;
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t seed = derive_seed(8, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(seed);
    const QuadState spawn = sample_waypoint_spawn(cfg.spawn, rng);
    PosePidAgent pid(gains);
    runs.push_back(summarize_record(run_waypoint_episode(pid, nominal_params(), spawn, cfg, seed)));
  }
  const Aggregate agg = summarize_runs(runs);
  const double t = seconds_since(t0);
  v.require(gains.traj_duration == 10.0 && gains.traj_rise == 0.335, "trajectory parameters");
  v.require(agg.successes >= 18, std::to_string(agg.successes) + "/20 successes");
  v.require(agg.settling_time.mean >= 8.0 && agg.settling_time.mean <= 12.5,
            "settling " + fmt(agg.settling_time.mean));
  v.require(agg.longitudinal_error.mean < 0.1, "longitudinal " + fmt(agg.longitudinal_error.mean));
  v.require(t < 300.0, "runtime " + fmt(t) + " s");
  v.detail << agg.successes << "/20 successes, settling " << fmt(agg.settling_time.mean) << " +- "
           << fmt(agg.settling_time.std) << " s, longitudinal " << fmt(agg.longitudinal_error.mean)
           << " m, vertical " << fmt(agg.vertical_error.mean) << " m, " << fmt(t) << " s";
}

// 9 -------------------------------------------------------------------------
/// The full-scale 10k-step uniform warmup would use up most of a 300-episode
/// budget, so the smoke run lets the policy act from the first step.
constexpr std::int64_t kSmokeWarmup = 0;

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += v[i];
  return s / static_cast<double>(to - from);
}

void sac_smoke(Verdict& v, const std::string& mode) {
  const auto t0 = Clock::now();
  WaypointEnvConfig ec;
  ec.randomization.enabled = false;
  ec.disturbances = DisturbanceConfig{};
  ec.action_mode = mode == "velocity" ? ActionMode::kVelocity : ActionMode::kMotor;
  WaypointEnv env(ec);
  SacConfig sc;
  sc.warmup_steps = kSmokeWarmup;
  SacTrainer trainer(sc, 1);
  std::vector<double> returns, errors;
  for (int e = 0; e < 300; ++e) {
    const EpisodeMetrics m = trainer.train_episode(env);
    returns.push_back(m.episode_return);
    errors.push_back(m.final_position_error);
    if ((e + 1) % 25 == 0)
      std::cerr << "episode " << e + 1 << " return " << fmt(m.episode_return) << " error "
                << fmt(m.final_position_error) << " (" << fmt(seconds_since(t0)) << " s)\n";
  }
  const double first = mean_of(returns, 0, 50), last = mean_of(returns, 250, 300);
  const double final_error = mean_of(errors, 250, 300);
  v.require(last > first, "return did not improve");
  v.require(final_error < 0.3, "final position error " + fmt(final_error));
  v.detail << mode << " mode, mean return " << fmt(first) << " -> " << fmt(last) << ", final error "
           << fmt(final_error) << " m, " << fmt(seconds_since(t0)) << " s";
}

// 10 ------------------------------------------------------------------------
/// Loaded (x1.30 mass, +0.10 m hub) exactly while carrying, i.e. in phase 1.
bool trace_follows_payload(const EpisodeRecord& rec, const QuadParams& p, int seen[3]) {
  bool ok = true;
  for (const StepRecord& s : rec.steps) {
    ++seen[s.phase];
    const double mass = s.phase == 1 ? p.mass * 1.30 : p.mass;
    const double hub = s.phase == 1 ? p.hub_radius + 0.10 : p.hub_radius;
    ok = ok && std::abs(s.mass - mass) <= 1e-12 * mass && std::abs(s.hub - hub) <= 1e-12;
  }
  return ok;
}

void payload_harness(Verdict& v) {
  const CourseSpec spec;
  const TestRange range = TestRange::for_task(TestTask::kPickup);
  int teleport_ok = 0, hold_ok = 0, bad_traces = 0;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t seed = derive_seed(10, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(seed);
    const QuadParams p = range.sample(rng);
    const QuadState spawn = sample_course_spawn(spec, rng);

    TeleportController tp;
    const EpisodeRecord rec = run_payload_course(tp, p, spawn, spec, seed);
    teleport_ok += rec.success() ? 1 : 0;
    int seen[3] = {0, 0, 0};
    bool ok = trace_follows_payload(rec, p, seen);
    ok = ok && seen[0] > 0 && seen[1] > 0 && seen[2] > 0;
    bad_traces += ok ? 0 : 1;

    // The hold stub can still pick up when it spawns inside the pickup radius.
    HoldController hold;
    const EpisodeRecord held = run_payload_course(hold, p, spawn, spec, seed);
    hold_ok += held.success() ? 1 : 0;
    int held_seen[3] = {0, 0, 0};
    bad_traces += trace_follows_payload(held, p, held_seen) ? 0 : 1;
  }
  v.require(teleport_ok == 100, "teleport " + std::to_string(teleport_ok) + "/100");
  v.require(hold_ok == 0, "hold " + std::to_string(hold_ok) + "/100");
  v.require(bad_traces == 0, std::to_string(bad_traces) + " bad mass traces");
  v.detail << "teleport " << teleport_ok << "/100, hold " << hold_ok << "/100, mass traces ok in "
           << 200 - bad_traces << "/200 records";
}

// 11 ------------------------------------------------------------------------
void expectation_oracle(Verdict& v) {
  MapSpec spec;
  std::mt19937_64 rng(11);
  std::vector<LabeledResult> results;
  std::bernoulli_distribution coin(0.6);
  for (int i = 0; i < 1000; ++i) {
    const QuadParams p = spec.range.sample(rng);
    results.push_back({p.prop_diameter, p.mass, coin(rng)});
  }
  const ExpectationMap map = expectation_map(results, spec);
  const double m0 = spec.range.mass_min(6.0), m1 = spec.range.mass_max(12.0);
  long mismatches = 0, defined = 0;
  for (int i = 0; i < 100; ++i) {
    const double d = 6.0 + i * (12.0 - 6.0) / 99;
    for (int j = 0; j < 100; ++j) {
      const double m = m0 + j * (m1 - m0) / 99;
      int ok = 0, all = 0;
      for (const LabeledResult& r : results) {
        if (std::abs(r.diameter - d) <= 0.5 && std::abs(r.mass - m) <= 0.417 / 2) {
          ++all;
          ok += r.success ? 1 : 0;
        }
      }
      const bool inside = m >= spec.range.mass_min(d) && m <= spec.range.mass_max(d);
      const bool is_defined = all > 0 && inside;
      defined += is_defined ? 1 : 0;
      const std::size_t k = static_cast<std::size_t>(i * 100 + j);
      bool match = map.totals[k] == all && map.successes[k] == ok && map.defined(i, j) == is_defined;
      if (is_defined) match = match && map.expectation(i, j) == static_cast<double>(ok) / all;
      else match = match && std::isnan(map.expectation(i, j));
      mismatches += match ? 0 : 1;
    }
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " mismatched cells");
  v.detail << "1000 labeled points, " << defined << " defined cells, " << mismatches << " mismatches";
}

// 12 ------------------------------------------------------------------------
int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null").c_str());
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Every CSV under `a` has a byte-identical twin under `b`.
int compare_csvs(const fs::path& a, const fs::path& b, Verdict& v) {
  int n = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path rel = fs::relative(entry.path(), a);
    v.require(fs::exists(b / rel) && slurp(entry.path()) == slurp(b / rel), "differs: " + rel.string());
    ++n;
  }
  return n;
}

void determinism(Verdict& v, const std::string& cli) {
  if (cli.empty()) {
    v.require(false, "no --cli path given");
    return;
  }
  const fs::path root = fs::temp_directory_path() / ("quadrl_determinism_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string q = "\"" + cli + "\"";
  const std::string train = q + " train --mode velocity --episodes 10 --seed 12 --checkpoint-every 5 --out ";
  v.require(run(train + (root / "train_a").string()) == 0, "train A exit status");
  v.require(run(train + (root / "train_b").string()) == 0, "train B exit status");
  const int train_csvs = compare_csvs(root / "train_a", root / "train_b", v);
  v.require(slurp(root / "train_a" / "final.ckpt") == slurp(root / "train_b" / "final.ckpt"), "checkpoints differ");

  const std::string eval = q + " eval-pickup --controller learned --episodes 10 --seed 12 --checkpoint " +
                           (root / "train_a" / "final.ckpt").string();
  v.require(run(eval + " --jobs 1 --out " + (root / "eval_a").string()) == 0, "eval A exit status");
  v.require(run(eval + " --jobs 2 --out " + (root / "eval_b").string()) == 0, "eval B exit status");
  const int eval_csvs = compare_csvs(root / "eval_a", root / "eval_b", v);
  v.require(train_csvs >= 1 && eval_csvs >= 5, "expected CSV outputs missing");
  v.detail << train_csvs << " training and " << eval_csvs << " evaluation CSVs byte-identical";
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int criterion = 0;
  std::string cli;
  std::string smoke_mode = "velocity";
  app.add_option("--criterion", criterion, "Criterion number")->required()->check(CLI::Range(1, 12));
  app.add_option("--cli", cli, "Path to the quadrl executable (criterion 12)");
  app.add_option("--smoke-mode", smoke_mode, "Action mode for the SAC smoke run")
      ->check(CLI::IsMember({"motor", "velocity"}));
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::pair<std::string, std::function<void(Verdict&)>>> checks = {
      {1, {"dynamics oracle suite", dynamics_oracles}},
      {2, {"allocation exactness", allocation}},
      {3, {"reward point tests", reward_points}},
      {4, {"soft-clip", soft_clip_points}},
      {5, {"gradient correctness", gradients}},
      {6, {"temperature contract", temperature_contract}},
      {7, {"CMA-ES sanity", cmaes_sanity}},
      {8, {"PID baseline reproduction", pid_baseline}},
      {9, {"SAC smoke learning", [&](Verdict& v) { sac_smoke(v, smoke_mode); }}},
      {10, {"payload-course harness", payload_harness}},
      {11, {"expectation map oracle", expectation_oracle}},
      {12, {"end-to-end determinism", [&](Verdict& v) { determinism(v, cli); }}},
  };
  const auto& [name, check] = checks.at(criterion);
  Verdict v;
  try {
    check(v);
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  std::cout << "criterion " << criterion << " (" << name << "): " << (v.pass ? "PASS" : "FAIL") << " - "
            << v.detail.str() << std::endl;
  return v.pass ? 0 : 1;
}
