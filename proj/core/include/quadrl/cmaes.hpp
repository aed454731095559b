#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace quadrl {

/// (mu/mu_w, lambda) CMA-ES with rank-one and rank-mu covariance updates and
/// cumulative step-size adaptation. Minimizes.
class Cmaes {
 public:
  /// lambda <= 0 selects the default population 4 + floor(3 ln n).
  Cmaes(Eigen::VectorXd x0, double sigma0, std::uint64_t seed, int lambda = 0);

  static int default_population(int dim);

  /// Draws a new population. Must be followed by exactly one tell().
  const std::vector<Eigen::VectorXd>& ask();
  /// Fitness values in population order. Non-finite values rank last.
  void tell(const std::vector<double>& fitness);

  int dim() const { return static_cast<int>(mean_.size()); }
  int population() const { return lambda_; }
  int parents() const { return mu_; }
  int generation() const { return generation_; }
  std::int64_t evaluations() const { return evaluations_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::VectorXd& best_x() const { return best_x_; }
  double best_fitness() const { return best_f_; }

 private:
  void decompose();

  int lambda_ = 0;
  int mu_ = 0;
  Eigen::VectorXd weights_;
  double mu_eff_ = 0.0;
  double cc_ = 0.0, cs_ = 0.0, c1_ = 0.0, cmu_ = 0.0, damps_ = 0.0, chi_n_ = 0.0;

  Eigen::VectorXd mean_;
  double sigma_ = 0.0;
  Eigen::MatrixXd cov_, basis_;
  Eigen::VectorXd scales_;  // square roots of the covariance eigenvalues
  Eigen::VectorXd path_c_, path_s_;

  std::mt19937_64 rng_;
  std::vector<Eigen::VectorXd> population_;
  bool awaiting_tell_ = false;
  int generation_ = 0;
  std::int64_t evaluations_ = 0;
  Eigen::VectorXd best_x_;
  double best_f_;
};

}  // namespace quadrl
