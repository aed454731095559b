#include "quadrl/sac.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace quadrl {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4b435251;  // "QRCK"
constexpr std::uint32_t kCheckpointVersion = 1;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  }
  return m;
}

}  // namespace

void SacConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("SacConfig: need at least one hidden layer");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("SacConfig: gamma must be in [0, 1)");
  if (!(polyak_tau > 0.0 && polyak_tau <= 1.0)) throw std::invalid_argument("SacConfig: polyak_tau must be in (0, 1]");
  if (batch_size < 1 || gradient_steps < 0) throw std::invalid_argument("SacConfig: bad batch/gradient step counts");
  if (!(initial_temperature > 0.0)) throw std::invalid_argument("SacConfig: initial_temperature must be > 0");
  if (!(log_std_max > log_std_min)) throw std::invalid_argument("SacConfig: log_std range is empty");
  if (buffer_capacity < 1) throw std::invalid_argument("SacConfig: buffer_capacity must be >= 1");
  if (warmup_steps < 0) throw std::invalid_argument("SacConfig: warmup_steps must be >= 0");
}

ReplayBuffer::ReplayBuffer(std::int64_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(const Transition& t) {
  if (size() < capacity_) {
    data_.push_back(t);
    return;
  }
  data_[static_cast<std::size_t>(head_)] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::int64_t i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("ReplayBuffer::at");
  return data_[static_cast<std::size_t>((head_ + i) % size())];
}

std::vector<std::int64_t> ReplayBuffer::sample_indices(int n, std::mt19937_64& rng) const {
  if (data_.empty()) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::int64_t> pick(0, size() - 1);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::sample(int n, std::mt19937_64& rng) const {
  return gather(sample_indices(n, rng));
}

Batch ReplayBuffer::gather(const std::vector<std::int64_t>& indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.s.resize(kObsDim, n);
  b.a.resize(kActionDim, n);
  b.r.resize(n);
  b.s_next.resize(kObsDim, n);
  b.done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = data_[static_cast<std::size_t>(indices[static_cast<std::size_t>(j)])];
    b.s.col(j) = t.s;
    b.a.col(j) = t.a;
    b.r[j] = t.r;
    b.s_next.col(j) = t.s_next;
    b.done[j] = t.terminal ? 1.0 : 0.0;
  }
  return b;
}

Eigen::VectorXd squashed_log_prob(const Eigen::MatrixXd& noise, const Eigen::MatrixXd& log_std,
                                  const Eigen::MatrixXd& pre_squash) {
  const double half_log_2pi = 0.5 * std::log(2.0 * kPi);
  const double log2 = std::log(2.0);
  Eigen::VectorXd lp(noise.cols());
  for (Eigen::Index j = 0; j < noise.cols(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < noise.rows(); ++i) {
      const double u = pre_squash(i, j);
      // log(1 - tanh(u)^2) written to stay finite for large |u|
      const double log_jac = 2.0 * (log2 - u - softplus(-2.0 * u));
      acc += -0.5 * noise(i, j) * noise(i, j) - log_std(i, j) - half_log_2pi - log_jac;
    }
    lp[j] = acc;
  }
  return lp;
}

SacAgent::SacAgent(const SacConfig& cfg, std::uint64_t seed, int obs_dim, int act_dim)
    : cfg_(cfg), act_dim_(act_dim) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  std::vector<int> actor_dims{obs_dim};
  actor_dims.insert(actor_dims.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  actor_dims.push_back(2 * act_dim);
  actor_ = Mlp(actor_dims,
               {{act_dim, Activation::kTanh, 0.0, 1.0, cfg_.mean_init_scale},
                {act_dim, Activation::kScaledSigmoid, cfg_.log_std_min, cfg_.log_std_max}},
               rng);
  std::vector<int> critic_dims{obs_dim + act_dim};
  critic_dims.insert(critic_dims.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  critic_dims.push_back(1);
  q1_ = Mlp(critic_dims, {}, rng);
  q2_ = Mlp(critic_dims, {}, rng);
  q1_target_ = q1_;
  q2_target_ = q2_;
  actor_opt_ = Adam(actor_.num_params(), cfg_.actor_lr);
  q1_opt_ = Adam(q1_.num_params(), cfg_.critic_lr);
  q2_opt_ = Adam(q2_.num_params(), cfg_.critic_lr);
  temp_opt_ = Adam(1, cfg_.temperature_lr);
  log_temp_ = std::log(cfg_.initial_temperature);
}

double SacAgent::temperature() const { return std::exp(log_temp_); }

Eigen::MatrixXd SacAgent::critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) const {
  Eigen::MatrixXd x(s.rows() + a.rows(), s.cols());
  x.topRows(s.rows()) = s;
  x.bottomRows(a.rows()) = a;
  return x;
}

PolicySample SacAgent::sample(const Eigen::MatrixXd& obs, std::mt19937_64& rng,
                              SampleMode mode) const {
  const Eigen::MatrixXd out = actor_.forward(obs);
  PolicySample ps;
  ps.mean = out.topRows(act_dim_);
  ps.log_std = out.bottomRows(act_dim_);
  ps.noise = mode == SampleMode::kStochastic ? standard_normal(act_dim_, obs.cols(), rng)
                                             : Eigen::MatrixXd::Zero(act_dim_, obs.cols());
  ps.pre_squash = ps.mean + (ps.log_std.array().exp() * ps.noise.array()).matrix();
  ps.action = ps.pre_squash.array().tanh().matrix();
  ps.log_prob = squashed_log_prob(ps.noise, ps.log_std, ps.pre_squash);
  return ps;
}

Vec4 SacAgent::act(const Observation& obs, std::mt19937_64& rng, SampleMode mode) const {
  return sample(Eigen::MatrixXd(obs), rng, mode).action.col(0);
}

Eigen::VectorXd SacAgent::td_targets(const Batch& batch, std::mt19937_64& rng) const {
  const PolicySample next = sample(batch.s_next, rng, SampleMode::kStochastic);
  const Eigen::MatrixXd next_in = critic_input(batch.s_next, next.action);
  const Eigen::VectorXd q1t = q1_target_.forward(next_in).row(0).transpose();
  const Eigen::VectorXd q2t = q2_target_.forward(next_in).row(0).transpose();
  const Eigen::VectorXd soft_value = q1t.cwiseMin(q2t) - temperature() * next.log_prob;
  return batch.r + cfg_.gamma * (1.0 - batch.done.array()).matrix().cwiseProduct(soft_value);
}

double SacAgent::critic_update(const Batch& batch, std::mt19937_64& rng) {
  const auto n = static_cast<double>(batch.s.cols());
  const Eigen::VectorXd y = td_targets(batch, rng);

  const Eigen::MatrixXd in = critic_input(batch.s, batch.a);
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    Mlp& q = critic(i);
    Mlp::Cache cache;
    const Eigen::VectorXd pred = q.forward(in, cache).row(0).transpose();
    const Eigen::VectorXd diff = pred - y;
    total += diff.squaredNorm() / n;
    Eigen::VectorXd grad;
    q.backward(cache, (2.0 / n) * diff.transpose(), &grad, nullptr);
    clip_grad_norm(grad, cfg_.grad_clip);
    critic_optimizer(i).step(q.params(), grad);
  }
  return 0.5 * total;
}

double SacAgent::actor_update(const Batch& batch, std::mt19937_64& rng,
                              Eigen::VectorXd* log_probs) {
  const Eigen::Index n = batch.s.cols();
  Mlp::Cache actor_cache;
  const Eigen::MatrixXd& out = actor_.forward(batch.s, actor_cache);
  const Eigen::MatrixXd mean = out.topRows(act_dim_);
  const Eigen::MatrixXd log_std = out.bottomRows(act_dim_);
  const Eigen::MatrixXd noise = standard_normal(act_dim_, n, rng);
  const Eigen::ArrayXXd sigma = log_std.array().exp();
  const Eigen::MatrixXd pre = mean + (sigma * noise.array()).matrix();
  const Eigen::ArrayXXd a = pre.array().tanh();
  const Eigen::VectorXd logp = squashed_log_prob(noise, log_std, pre);

  const Eigen::MatrixXd in = critic_input(batch.s, a.matrix());
  Mlp::Cache c1, c2;
  const Eigen::VectorXd q1 = q1_.forward(in, c1).row(0).transpose();
  const Eigen::VectorXd q2 = q2_.forward(in, c2).row(0).transpose();
  Eigen::MatrixXd pick1(1, n), pick2(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    pick1(0, j) = q1[j] <= q2[j] ? 1.0 : 0.0;
    pick2(0, j) = 1.0 - pick1(0, j);
  }
  Eigen::MatrixXd gin1, gin2;
  q1_.backward(c1, pick1, nullptr, &gin1);
  q2_.backward(c2, pick2, nullptr, &gin2);
  const Eigen::ArrayXXd dq_da = (gin1 + gin2).bottomRows(act_dim_).array();

  const double tau = temperature();
  const Eigen::ArrayXXd dq_du = dq_da * (1.0 - a.square());
  const Eigen::ArrayXXd sigma_eps = sigma * noise.array();
  Eigen::MatrixXd grad_out(2 * act_dim_, n);
  grad_out.topRows(act_dim_) = ((tau * 2.0 * a - dq_du) / static_cast<double>(n)).matrix();
  grad_out.bottomRows(act_dim_) =
      ((tau * (-1.0 + 2.0 * a * sigma_eps) - dq_du * sigma_eps) / static_cast<double>(n)).matrix();

  Eigen::VectorXd grad;
  actor_.backward(actor_cache, grad_out, &grad, nullptr);
  clip_grad_norm(grad, cfg_.grad_clip);
  actor_opt_.step(actor_.params(), grad);

  if (log_probs) *log_probs = logp;
  return (tau * logp - q1.cwiseMin(q2)).mean();
}

double SacAgent::temperature_update(const Eigen::VectorXd& log_probs) {
  const double entropy = -log_probs.mean();
  Eigen::VectorXd param(1), grad(1);
  param[0] = log_temp_;
  grad[0] = entropy - cfg_.target_entropy;
  temp_opt_.step(param, grad);
  log_temp_ = param[0];
  return temperature();
}

void SacAgent::update_targets() {
  polyak(q1_target_.params(), q1_.params(), cfg_.polyak_tau);
  polyak(q2_target_.params(), q2_.params(), cfg_.polyak_tau);
}

UpdateStats SacAgent::update(const Batch& batch, std::mt19937_64& rng) {
  UpdateStats st;
  st.critic_loss = critic_update(batch, rng);
  Eigen::VectorXd logp;
  st.actor_loss = actor_update(batch, rng, &logp);
  st.entropy = -logp.mean();
  st.temperature = temperature_update(logp);
  update_targets();
  return st;
}

void SacAgent::save(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    binary::write_u32(out, kCheckpointMagic);
    binary::write_u32(out, kCheckpointVersion);
    binary::write_f64(out, log_temp_);
    for (const Mlp* net : {&actor_, &q1_, &q2_, &q1_target_, &q2_target_}) write_mlp(out, *net);
    for (const Adam* opt : {&actor_opt_, &q1_opt_, &q2_opt_, &temp_opt_}) write_adam(out, *opt);
    if (!out) throw std::runtime_error("error while writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {
std::ifstream open_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  if (binary::read_u32(in) != kCheckpointMagic) {
    throw std::runtime_error(path.string() + " is not a checkpoint file");
  }
  const std::uint32_t version = binary::read_u32(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  return in;
}
}  // namespace

SacAgent SacAgent::load(const std::filesystem::path& path, const SacConfig& cfg) {
  std::ifstream in = open_checkpoint(path);
  SacAgent agent;
  agent.cfg_ = cfg;
  agent.log_temp_ = binary::read_f64(in);
  for (Mlp* net : {&agent.actor_, &agent.q1_, &agent.q2_, &agent.q1_target_, &agent.q2_target_}) {
    *net = read_mlp(in);
  }
  for (Adam* opt : {&agent.actor_opt_, &agent.q1_opt_, &agent.q2_opt_, &agent.temp_opt_}) {
    *opt = read_adam(in);
  }
  agent.act_dim_ = agent.actor_.output_dim() / 2;
  return agent;
}

Mlp SacAgent::load_actor(const std::filesystem::path& path) {
  std::ifstream in = open_checkpoint(path);
  binary::read_f64(in);
  return read_mlp(in);
}

bool SacAgent::operator==(const SacAgent& o) const {
  return log_temp_ == o.log_temp_ && actor_ == o.actor_ && q1_ == o.q1_ && q2_ == o.q2_ &&
         q1_target_ == o.q1_target_ && q2_target_ == o.q2_target_ &&
         actor_opt_ == o.actor_opt_ && q1_opt_ == o.q1_opt_ && q2_opt_ == o.q2_opt_ &&
         temp_opt_ == o.temp_opt_;
}

SacTrainer::SacTrainer(const SacConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      agent_(cfg, seed),
      buffer_(cfg.buffer_capacity),
      rng_(seed ^ 0x9e3779b97f4a7c15ULL) {}

EpisodeMetrics SacTrainer::train_episode(EpisodicEnv& env) {
  EpisodeMetrics m;
  m.episode = episodes_;
  Observation obs = env.reset(rng_);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (;;) {
    Vec4 a;
    if (env_steps_ < cfg_.warmup_steps) {
      for (int i = 0; i < kActionDim; ++i) a[i] = uniform(rng_);
    } else {
      a = agent_.act(obs, rng_, SampleMode::kStochastic);
    }
    const StepResult sr = env.step(a);
    buffer_.push({obs, a, sr.reward, sr.obs, sr.terminal});
    m.episode_return += sr.reward;
    ++m.steps;
    ++env_steps_;
    obs = sr.obs;
    if (sr.terminal || sr.truncated) {
      m.terminal = sr.terminal;
      break;
    }
  }
  m.final_position_error = env.position_error();

  if (buffer_.size() >= cfg_.batch_size) {
    for (int k = 0; k < cfg_.gradient_steps; ++k) {
      const UpdateStats st = agent_.update(buffer_.sample(cfg_.batch_size, rng_), rng_);
      m.critic_loss += st.critic_loss;
      m.actor_loss += st.actor_loss;
      m.entropy += st.entropy;
      ++m.updates;
    }
    if (m.updates > 0) {
      m.critic_loss /= m.updates;
      m.actor_loss /= m.updates;
      m.entropy /= m.updates;
    }
  }
  m.temperature = agent_.temperature();
  ++episodes_;
  return m;
}

}  // namespace quadrl
