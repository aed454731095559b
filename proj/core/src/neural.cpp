#include "quadrl/neural.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace quadrl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

void check_shape(const std::vector<int>& dims, const std::vector<HeadSpec>& heads) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("Mlp: layer dimensions must be positive");
  }
  int covered = 0;
  for (const HeadSpec& h : heads) {
    if (h.size <= 0) throw std::invalid_argument("Mlp: head size must be positive");
    if (h.activation == Activation::kScaledSigmoid && !(h.hi > h.lo)) {
      throw std::invalid_argument("Mlp: scaled sigmoid head needs hi > lo");
    }
    covered += h.size;
  }
  if (covered != dims.back()) {
    throw std::invalid_argument("Mlp: heads cover " + std::to_string(covered) +
                                " rows but output dim is " + std::to_string(dims.back()));
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> dims, std::vector<HeadSpec> heads)
    : dims_(std::move(dims)), heads_(std::move(heads)) {
  if (heads_.empty() && !dims_.empty()) heads_.push_back(HeadSpec{dims_.back()});
  check_shape(dims_, heads_);
  layout();
}

Mlp::Mlp(std::vector<int> dims, std::vector<HeadSpec> heads, std::mt19937_64& rng)
    : Mlp(std::move(dims), std::move(heads)) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = weight(l);
    auto b = bias(l);
    // Column-major fill keeps the draw order independent of Eigen internals.
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
    }
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = u(rng);
  }
  const int last = num_layers() - 1;
  int row = 0;
  for (const HeadSpec& h : heads_) {
    weight(last).middleRows(row, h.size) *= h.init_scale;
    bias(last).segment(row, h.size) *= h.init_scale;
    row += h.size;
  }
}

void Mlp::layout() {
  w_offset_.clear();
  b_offset_.clear();
  Eigen::Index offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    w_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l];
    b_offset_.push_back(offset);
    offset += dims_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  return {params_.data() + w_offset_[layer], dims_[layer + 1], dims_[layer]};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + w_offset_[layer], dims_[layer + 1], dims_[layer]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  return {params_.data() + b_offset_[layer], dims_[layer + 1]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + b_offset_[layer], dims_[layer + 1]};
}

void Mlp::apply_heads(Eigen::MatrixXd& z) const {
  int row = 0;
  for (const HeadSpec& h : heads_) {
    auto block = z.middleRows(row, h.size);
    switch (h.activation) {
      case Activation::kLinear:
        break;
      case Activation::kTanh:
        block = block.array().tanh().matrix();
        break;
      case Activation::kScaledSigmoid:
        block = (h.lo + (h.hi - h.lo) / (1.0 + (-block.array()).exp())).matrix();
        break;
    }
    row += h.size;
  }
}

void Mlp::head_derivative(const Eigen::MatrixXd& y, Eigen::MatrixXd& g) const {
  int row = 0;
  for (const HeadSpec& h : heads_) {
    auto gb = g.middleRows(row, h.size);
    const auto yb = y.middleRows(row, h.size);
    switch (h.activation) {
      case Activation::kLinear:
        break;
      case Activation::kTanh:
        gb = (gb.array() * (1.0 - yb.array().square())).matrix();
        break;
      case Activation::kScaledSigmoid: {
        const double span = h.hi - h.lo;
        const auto s = (yb.array() - h.lo) / span;
        gb = (gb.array() * span * s * (1.0 - s)).matrix();
        break;
      }
    }
    row += h.size;
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  assert(x.rows() == input_dim());
  Eigen::MatrixXd a = x;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) {
      a = z.cwiseMax(0.0);
    } else {
      apply_heads(z);
      return z;
    }
  }
  return a;
}

const Eigen::MatrixXd& Mlp::forward(const Eigen::MatrixXd& x, Cache& cache) const {
  assert(x.rows() == input_dim());
  cache.activations.resize(num_layers());
  cache.activations[0] = x;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * cache.activations[l];
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) {
      cache.activations[l + 1] = z.cwiseMax(0.0);
    } else {
      apply_heads(z);
      cache.output = std::move(z);
    }
  }
  return cache.output;
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_out,
                   Eigen::VectorXd* grad_params, Eigen::MatrixXd* grad_input) const {
  assert(grad_out.rows() == output_dim() && grad_out.cols() == cache.output.cols());
  if (grad_params) grad_params->setZero(num_params());
  Eigen::MatrixXd g = grad_out;
  head_derivative(cache.output, g);
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a_in = cache.activations[l];
    if (grad_params) {
      Eigen::Map<Eigen::MatrixXd>(grad_params->data() + w_offset_[l], dims_[l + 1],
                                  dims_[l]).noalias() = g * a_in.transpose();
      Eigen::Map<Eigen::VectorXd>(grad_params->data() + b_offset_[l], dims_[l + 1]) =
          g.rowwise().sum();
    }
    if (l == 0 && !grad_input) break;
    Eigen::MatrixXd prev = weight(l).transpose() * g;
    if (l == 0) {
      *grad_input = std::move(prev);
    } else {
      g = (a_in.array() > 0.0).select(prev, 0.0);
    }
  }
}

bool Mlp::operator==(const Mlp& other) const {
  return dims_ == other.dims_ && heads_ == other.heads_ &&
         params_.size() == other.params_.size() &&
         std::memcmp(params_.data(), other.params_.data(),
                     sizeof(double) * params_.size()) == 0;
}

Adam::Adam(Eigen::Index n, double learning_rate)
    : lr(learning_rate), m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  assert(params.size() == grad.size());
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

bool Adam::operator==(const Adam& o) const {
  auto same = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
  };
  return lr == o.lr && beta1 == o.beta1 && beta2 == o.beta2 && eps == o.eps && t == o.t &&
         same(m, o.m) && same(v, o.v);
}

void polyak(Eigen::VectorXd& target, const Eigen::VectorXd& source, double tau) {
  assert(target.size() == source.size());
  target = (1.0 - tau) * target + tau * source;
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

namespace binary {

namespace {
template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: unexpected end of data");
  return v;
}
}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void write_i64(std::ostream& out, std::int64_t v) { put(out, v); }
void write_f64(std::ostream& out, double v) { put(out, v); }
void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  write_i64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
}
std::uint32_t read_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::int64_t read_i64(std::istream& in) { return get<std::int64_t>(in); }
double read_f64(std::istream& in) { return get<double>(in); }
Eigen::VectorXd read_vector(std::istream& in) {
  const std::int64_t n = read_i64(in);
  if (n < 0 || n > (std::int64_t{1} << 32)) throw std::runtime_error("checkpoint: bad vector length");
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!in) throw std::runtime_error("checkpoint: unexpected end of data");
  return v;
}

}  // namespace binary

void write_mlp(std::ostream& out, const Mlp& net) {
  binary::write_u32(out, static_cast<std::uint32_t>(net.dims().size()));
  for (int d : net.dims()) binary::write_u32(out, static_cast<std::uint32_t>(d));
  binary::write_u32(out, static_cast<std::uint32_t>(net.heads().size()));
  for (const HeadSpec& h : net.heads()) {
    binary::write_u32(out, static_cast<std::uint32_t>(h.size));
    binary::write_u32(out, static_cast<std::uint32_t>(h.activation));
    binary::write_f64(out, h.lo);
    binary::write_f64(out, h.hi);
    binary::write_f64(out, h.init_scale);
  }
  // Per layer: weight matrix in row-major order (out x in), then the bias.
  for (int l = 0; l < net.num_layers(); ++l) {
    const Eigen::MatrixXd w = net.weight(l);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w_rm = w;
    binary::write_vector(out, Eigen::Map<const Eigen::VectorXd>(w_rm.data(), w_rm.size()));
    binary::write_vector(out, net.bias(l));
  }
}

Mlp read_mlp(std::istream& in) {
  const std::uint32_t n_dims = binary::read_u32(in);
  if (n_dims < 2 || n_dims > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> dims(n_dims);
  for (int& d : dims) d = static_cast<int>(binary::read_u32(in));
  const std::uint32_t n_heads = binary::read_u32(in);
  if (n_heads > 1024) throw std::runtime_error("checkpoint: bad head count");
  std::vector<HeadSpec> heads(n_heads);
  for (HeadSpec& h : heads) {
    h.size = static_cast<int>(binary::read_u32(in));
    const std::uint32_t act = binary::read_u32(in);
    if (act > 2) throw std::runtime_error("checkpoint: unknown activation");
    h.activation = static_cast<Activation>(act);
    h.lo = binary::read_f64(in);
    h.hi = binary::read_f64(in);
    h.init_scale = binary::read_f64(in);
  }
  Mlp net(dims, heads);
  for (int l = 0; l < net.num_layers(); ++l) {
    const Eigen::VectorXd w = binary::read_vector(in);
    const Eigen::VectorXd b = binary::read_vector(in);
    auto weight = net.weight(l);
    if (w.size() != weight.size() || b.size() != net.bias(l).size()) {
      throw std::runtime_error("checkpoint: parameter count mismatch");
    }
    weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), weight.rows(), weight.cols());
    net.bias(l) = b;
  }
  return net;
}

void write_adam(std::ostream& out, const Adam& opt) {
  binary::write_f64(out, opt.lr);
  binary::write_f64(out, opt.beta1);
  binary::write_f64(out, opt.beta2);
  binary::write_f64(out, opt.eps);
  binary::write_i64(out, opt.t);
  binary::write_vector(out, opt.m);
  binary::write_vector(out, opt.v);
}

Adam read_adam(std::istream& in) {
  Adam opt;
  opt.lr = binary::read_f64(in);
  opt.beta1 = binary::read_f64(in);
  opt.beta2 = binary::read_f64(in);
  opt.eps = binary::read_f64(in);
  opt.t = binary::read_i64(in);
  opt.m = binary::read_vector(in);
  opt.v = binary::read_vector(in);
  if (opt.m.size() != opt.v.size()) throw std::runtime_error("checkpoint: Adam moment size mismatch");
  return opt;
}

}  // namespace quadrl
