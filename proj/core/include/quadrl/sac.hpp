#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "quadrl/dynamics.hpp"
#include "quadrl/neural.hpp"

namespace quadrl {

inline constexpr int kActionDim = 4;

struct SacConfig {
  std::vector<int> hidden = {400, 300};
  double gamma = 0.99;
  double polyak_tau = 0.005;
  int batch_size = 256;
  int gradient_steps = 128;  // per finished episode
  double actor_lr = 3e-5;
  double critic_lr = 3e-4;
  double temperature_lr = 3e-4;
  double target_entropy = -4.0;
  double initial_temperature = 1.0;
  double log_std_min = -9.0;
  double log_std_max = 2.0;
  double grad_clip = 10.0;
  double mean_init_scale = 0.01;
  std::int64_t buffer_capacity = 10'000'000;
  std::int64_t warmup_steps = 10'000;  // uniform random actions before the policy acts

  void validate() const;
};

struct Transition {
  Observation s = Observation::Zero();
  Vec4 a = Vec4::Zero();
  double r = 0.0;
  Observation s_next = Observation::Zero();
  bool terminal = false;
};

/// Column-per-sample minibatch.
struct Batch {
  Eigen::MatrixXd s;       // obs x N
  Eigen::MatrixXd a;       // act x N
  Eigen::VectorXd r;       // N
  Eigen::MatrixXd s_next;  // obs x N
  Eigen::VectorXd done;    // N, 1 for terminal
};

/// FIFO ring buffer that grows on demand up to its capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::int64_t capacity);

  void push(const Transition& t);
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t capacity() const { return capacity_; }
  /// i-th stored transition, oldest first.
  const Transition& at(std::int64_t i) const;

  std::vector<std::int64_t> sample_indices(int n, std::mt19937_64& rng) const;
  Batch sample(int n, std::mt19937_64& rng) const;
  Batch gather(const std::vector<std::int64_t>& indices) const;

 private:
  std::int64_t capacity_;
  std::int64_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

enum class SampleMode { kStochastic, kDeterministic };

struct PolicySample {
  Eigen::MatrixXd action;    // tanh(pre_squash), act x N
  Eigen::VectorXd log_prob;  // N, includes the tanh correction
  Eigen::MatrixXd mean;      // act x N
  Eigen::MatrixXd log_std;   // act x N
  Eigen::MatrixXd noise;     // standard normal draws, act x N
  Eigen::MatrixXd pre_squash;
};

/// Gaussian log-density of u = mean + exp(log_std) * noise followed by tanh.
Eigen::VectorXd squashed_log_prob(const Eigen::MatrixXd& noise, const Eigen::MatrixXd& log_std,
                                  const Eigen::MatrixXd& pre_squash);

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;  // -mean(log pi) of the actor-update batch
  double temperature = 0.0;
};

class SacAgent {
 public:
  SacAgent() = default;
  SacAgent(const SacConfig& cfg, std::uint64_t seed, int obs_dim = kObsDim,
           int act_dim = kActionDim);

  const SacConfig& config() const { return cfg_; }
  int obs_dim() const { return actor_.input_dim(); }
  int act_dim() const { return act_dim_; }

  PolicySample sample(const Eigen::MatrixXd& obs, std::mt19937_64& rng, SampleMode mode) const;
  /// Single-observation convenience wrapper.
  Vec4 act(const Observation& obs, std::mt19937_64& rng, SampleMode mode) const;

  /// Soft Bellman targets r + gamma (1 - done) (min target Q - temperature log pi)
  /// with next actions drawn from the current policy.
  Eigen::VectorXd td_targets(const Batch& batch, std::mt19937_64& rng) const;
  /// Clipped double-Q regression; returns the mean loss of the two critics.
  double critic_update(const Batch& batch, std::mt19937_64& rng);
  /// Reparameterized actor step against min(Q1, Q2). Returns the actor loss
  /// and writes the batch log-probs for the temperature step.
  double actor_update(const Batch& batch, std::mt19937_64& rng, Eigen::VectorXd* log_probs);
  /// One Adam step on ln(temperature): entropy below target raises it.
  double temperature_update(const Eigen::VectorXd& log_probs);
  void update_targets();

  /// critic, actor, temperature and target update on one minibatch.
  UpdateStats update(const Batch& batch, std::mt19937_64& rng);

  double temperature() const;
  double log_temperature() const { return log_temp_; }
  void set_log_temperature(double v) { log_temp_ = v; }

  Mlp& actor() { return actor_; }
  const Mlp& actor() const { return actor_; }
  Mlp& critic(int i) { return i == 0 ? q1_ : q2_; }
  const Mlp& critic(int i) const { return i == 0 ? q1_ : q2_; }
  Mlp& target_critic(int i) { return i == 0 ? q1_target_ : q2_target_; }
  const Mlp& target_critic(int i) const { return i == 0 ? q1_target_ : q2_target_; }
  Adam& actor_optimizer() { return actor_opt_; }
  Adam& critic_optimizer(int i) { return i == 0 ? q1_opt_ : q2_opt_; }
  Adam& temperature_optimizer() { return temp_opt_; }
  const Adam& temperature_optimizer() const { return temp_opt_; }

  /// Versioned binary checkpoint of every network, optimizer and the temperature.
  void save(const std::filesystem::path& path) const;
  static SacAgent load(const std::filesystem::path& path, const SacConfig& cfg = {});
  /// Only the actor network, as needed for deployment.
  static Mlp load_actor(const std::filesystem::path& path);

  bool operator==(const SacAgent& other) const;

 private:
  Eigen::MatrixXd critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) const;

  SacConfig cfg_;
  int act_dim_ = kActionDim;
  Mlp actor_, q1_, q2_, q1_target_, q2_target_;
  Adam actor_opt_, q1_opt_, q2_opt_, temp_opt_;
  double log_temp_ = 0.0;
};

struct StepResult {
  Observation obs = Observation::Zero();
  double reward = 0.0;
  bool terminal = false;   // failure; bootstrap is masked
  bool truncated = false;  // step cap; bootstrap is kept
};

/// Minimal episodic interface the trainer drives.
class EpisodicEnv {
 public:
  virtual ~EpisodicEnv() = default;
  virtual Observation reset(std::mt19937_64& rng) = 0;
  virtual StepResult step(const Vec4& action) = 0;
  /// Distance to the goal in the current state (m).
  virtual double position_error() const = 0;
};

struct EpisodeMetrics {
  int episode = 0;
  double episode_return = 0.0;
  int steps = 0;
  bool terminal = false;
  double final_position_error = 0.0;
  double entropy = 0.0;
  double temperature = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  int updates = 0;
};

/// Owns the agent, replay buffer and training RNG; one call = one episode
/// rollout followed by the gradient phase.
class SacTrainer {
 public:
  SacTrainer(const SacConfig& cfg, std::uint64_t seed);

  EpisodeMetrics train_episode(EpisodicEnv& env);

  SacAgent& agent() { return agent_; }
  const SacAgent& agent() const { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t env_steps() const { return env_steps_; }
  int episodes() const { return episodes_; }

 private:
  SacConfig cfg_;
  SacAgent agent_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  std::int64_t env_steps_ = 0;
  int episodes_ = 0;
};

}  // namespace quadrl
