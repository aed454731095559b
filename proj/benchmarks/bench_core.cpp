#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "quadrl/controllers.hpp"
#include "quadrl/dynamics.hpp"
#include "quadrl/envs.hpp"
#include "quadrl/eval.hpp"
#include "quadrl/neural.hpp"
#include "quadrl/sac.hpp"

namespace {

using namespace quadrl;

void BM_IntegrateStep(benchmark::State& state) {
  const QuadParams p = nominal_params();
  const ModelConfig model;
  const MotorSpeeds u{Vec4(5400, 5300, 5350, 5320)};
  QuadState s;
  for (auto _ : state) {
    s = integrate_step(s, p, model, u, 0.025);
    benchmark::DoNotOptimize(s);
    if (s.position.norm() > 10.0) s = QuadState{};
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IntegrateStep);

void BM_ActorForwardBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  SacAgent agent(SacConfig{}, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd obs(kObsDim, batch);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = n(rng);
  const Mlp& actor = agent.actor();
  Mlp::Cache cache;
  Eigen::VectorXd grad;
  for (auto _ : state) {
    const Eigen::MatrixXd& y = actor.forward(obs, cache);
    actor.backward(cache, Eigen::MatrixXd::Ones(y.rows(), y.cols()), &grad, nullptr);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ActorForwardBackward)->Arg(1)->Arg(256);

void BM_SacUpdate(benchmark::State& state) {
  SacAgent agent(SacConfig{}, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ReplayBuffer buffer(4096);
  for (int i = 0; i < 4096; ++i) {
    Transition t;
    for (int k = 0; k < kObsDim; ++k) t.s[k] = n(rng), t.s_next[k] = n(rng);
    for (int k = 0; k < kActionDim; ++k) t.a[k] = u(rng);
    t.r = -std::abs(n(rng));
    buffer.push(t);
  }
  for (auto _ : state) {
    const UpdateStats st = agent.update(buffer.sample(256, rng), rng);
    benchmark::DoNotOptimize(st);
  }
}
BENCHMARK(BM_SacUpdate)->Unit(benchmark::kMillisecond);

void BM_PidWaypointEpisode(benchmark::State& state) {
  const WaypointEvalConfig cfg;
  std::mt19937_64 rng(5);
  const QuadState spawn = sample_waypoint_spawn(cfg.spawn, rng);
  for (auto _ : state) {
    PosePidAgent pid(reference_pose_gains());
    const EpisodeRecord rec = run_waypoint_episode(pid, nominal_params(), spawn, cfg, 1);
    benchmark::DoNotOptimize(rec.steps.data());
  }
}
BENCHMARK(BM_PidWaypointEpisode)->Unit(benchmark::kMillisecond);

void BM_ExpectationMap(benchmark::State& state) {
  const MapSpec spec;
  std::mt19937_64 rng(6);
  std::bernoulli_distribution coin(0.5);
  std::vector<LabeledResult> results;
  for (int i = 0; i < state.range(0); ++i) {
    const QuadParams p = spec.range.sample(rng);
    results.push_back({p.prop_diameter, p.mass, coin(rng)});
  }
  for (auto _ : state) {
    const ExpectationMap map = expectation_map(results, spec);
    benchmark::DoNotOptimize(map.totals.data());
  }
}
BENCHMARK(BM_ExpectationMap)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
