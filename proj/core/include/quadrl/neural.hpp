#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace quadrl {

enum class Activation : std::uint32_t {
  kLinear = 0,
  kTanh = 1,
  kScaledSigmoid = 2,  // lo + (hi - lo) * sigmoid(z)
};

/// A contiguous block of output rows sharing one activation.
struct HeadSpec {
  int size = 1;
  Activation activation = Activation::kLinear;
  double lo = 0.0;
  double hi = 1.0;
  double init_scale = 1.0;  // multiplies the initial weights feeding this head

  bool operator==(const HeadSpec&) const = default;
};

/// Dense ReLU network evaluated on column batches (one sample per column).
/// All parameters live in one flat vector so optimizers, averaging and
/// serialization treat the network as a single array.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // input, then each hidden ReLU output
    Eigen::MatrixXd output;
  };

  Mlp() = default;
  /// dims = {in, hidden..., out}; heads must cover exactly `out` rows (an
  /// empty list means one linear head). Weights ~ U(+-1/sqrt(fan_in)).
  Mlp(std::vector<int> dims, std::vector<HeadSpec> heads, std::mt19937_64& rng);
  /// Zero-initialized network with the given shape.
  Mlp(std::vector<int> dims, std::vector<HeadSpec> heads);

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<HeadSpec>& heads() const { return heads_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index num_params() const { return params_.size(); }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  const Eigen::MatrixXd& forward(const Eigen::MatrixXd& x, Cache& cache) const;

  /// Reverse pass for d(loss)/d(output) = grad_out. Either destination may be
  /// null; parameter gradients are overwritten, not accumulated.
  void backward(const Cache& cache, const Eigen::MatrixXd& grad_out,
                Eigen::VectorXd* grad_params, Eigen::MatrixXd* grad_input) const;

  bool operator==(const Mlp& other) const;

 private:
  void layout();
  void apply_heads(Eigen::MatrixXd& z) const;
  void head_derivative(const Eigen::MatrixXd& y, Eigen::MatrixXd& g) const;

  std::vector<int> dims_;
  std::vector<HeadSpec> heads_;
  std::vector<Eigen::Index> w_offset_, b_offset_;
  Eigen::VectorXd params_;
};

/// Bias-corrected Adam over a flat parameter vector.
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  Adam() = default;
  Adam(Eigen::Index n, double learning_rate);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  bool operator==(const Adam& other) const;
};

/// target <- (1 - tau) * target + tau * source
void polyak(Eigen::VectorXd& target, const Eigen::VectorXd& source, double tau);

/// Scales grad in place so its 2-norm is at most max_norm; returns the
/// norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

/// Little-endian binary encoding used inside checkpoints.
void write_mlp(std::ostream& out, const Mlp& net);
Mlp read_mlp(std::istream& in);
void write_adam(std::ostream& out, const Adam& opt);
Adam read_adam(std::istream& in);

namespace binary {
void write_u32(std::ostream& out, std::uint32_t v);
void write_i64(std::ostream& out, std::int64_t v);
void write_f64(std::ostream& out, double v);
void write_vector(std::ostream& out, const Eigen::VectorXd& v);
std::uint32_t read_u32(std::istream& in);
std::int64_t read_i64(std::istream& in);
double read_f64(std::istream& in);
Eigen::VectorXd read_vector(std::istream& in);
}  // namespace binary

}  // namespace quadrl
