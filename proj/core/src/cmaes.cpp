#include "quadrl/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace quadrl {

int Cmaes::default_population(int dim) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

Cmaes::Cmaes(Eigen::VectorXd x0, double sigma0, std::uint64_t seed, int lambda)
    : mean_(std::move(x0)), sigma_(sigma0), rng_(seed), best_f_(std::numeric_limits<double>::infinity()) {
  const int n = dim();
  if (n < 1) throw std::invalid_argument("Cmaes: empty start vector");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw std::invalid_argument("Cmaes: sigma0 must be positive");
  if (!mean_.allFinite()) throw std::invalid_argument("Cmaes: start vector must be finite");
  lambda_ = lambda > 0 ? lambda : default_population(n);
  if (lambda_ < 2) throw std::invalid_argument("Cmaes: population must be at least 2");
  mu_ = lambda_ / 2;

  weights_.resize(mu_);
  for (int i = 0; i < mu_; ++i) weights_[i] = std::log((lambda_ + 1) / 2.0) - std::log(i + 1.0);
  weights_ /= weights_.sum();
  mu_eff_ = 1.0 / weights_.squaredNorm();

  const double dn = n;
  cc_ = (4.0 + mu_eff_ / dn) / (dn + 4.0 + 2.0 * mu_eff_ / dn);
  cs_ = (mu_eff_ + 2.0) / (dn + mu_eff_ + 5.0);
  c1_ = 2.0 / ((dn + 1.3) * (dn + 1.3) + mu_eff_);
  cmu_ = std::min(1.0 - c1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((dn + 2.0) * (dn + 2.0) + mu_eff_));
  damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (dn + 1.0)) - 1.0) + cs_;
  chi_n_ = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  cov_ = Eigen::MatrixXd::Identity(n, n);
  basis_ = Eigen::MatrixXd::Identity(n, n);
  scales_ = Eigen::VectorXd::Ones(n);
  path_c_ = Eigen::VectorXd::Zero(n);
  path_s_ = Eigen::VectorXd::Zero(n);
  best_x_ = mean_;
}

void Cmaes::decompose() {
  // Enforce symmetry against round-off before the eigen solve.
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
  basis_ = es.eigenvectors();
  scales_ = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
}

const std::vector<Eigen::VectorXd>& Cmaes::ask() {
  if (awaiting_tell_) throw std::logic_error("Cmaes: ask() called twice without tell()");
  decompose();
  std::normal_distribution<double> normal(0.0, 1.0);
  population_.assign(static_cast<std::size_t>(lambda_), Eigen::VectorXd());
  for (auto& x : population_) {
    Eigen::VectorXd z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = normal(rng_);
    x = mean_ + sigma_ * (basis_ * scales_.cwiseProduct(z));
  }
  awaiting_tell_ = true;
  return population_;
}

void Cmaes::tell(const std::vector<double>& fitness) {
  if (!awaiting_tell_) throw std::logic_error("Cmaes: tell() without a preceding ask()");
  if (static_cast<int>(fitness.size()) != lambda_) {
    throw std::invalid_argument("Cmaes: fitness count does not match the population");
  }
  awaiting_tell_ = false;
  evaluations_ += lambda_;
  ++generation_;

  std::vector<double> f(fitness);
  for (double& v : f) {
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
  }
  std::vector<int> order(static_cast<std::size_t>(lambda_));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });

  if (f[order[0]] < best_f_) {
    best_f_ = f[order[0]];
    best_x_ = population_[order[0]];
  }

  const int n = dim();
  if (f[order.front()] == f[order.back()]) {
    // Flat fitness carries no ranking information: keep the mean and widen
    // the search so the next population can find a slope.
    sigma_ *= std::exp(0.2 + cs_ / damps_);
    return;
  }

  Eigen::MatrixXd y(n, mu_);
  for (int i = 0; i < mu_; ++i) y.col(i) = (population_[order[i]] - mean_) / sigma_;
  const Eigen::VectorXd y_w = y * weights_;
  mean_ += sigma_ * y_w;

  const Eigen::VectorXd c_inv_sqrt_y = basis_ * (basis_.transpose() * y_w).cwiseQuotient(scales_);
  path_s_ = (1.0 - cs_) * path_s_ + std::sqrt(cs_ * (2.0 - cs_) * mu_eff_) * c_inv_sqrt_y;
  const double ps_norm = path_s_.norm();
  const double decay = 1.0 - std::pow(1.0 - cs_, 2.0 * generation_);
  const bool hsig = ps_norm / std::sqrt(decay) / chi_n_ < 1.4 + 2.0 / (n + 1.0);
  path_c_ = (1.0 - cc_) * path_c_;
  if (hsig) path_c_ += std::sqrt(cc_ * (2.0 - cc_) * mu_eff_) * y_w;

  const double c1a = c1_ * (1.0 - (hsig ? 0.0 : cc_ * (2.0 - cc_)));
  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < mu_; ++i) rank_mu.noalias() += weights_[i] * y.col(i) * y.col(i).transpose();
  cov_ = (1.0 - c1a - cmu_) * cov_ + c1_ * path_c_ * path_c_.transpose() + cmu_ * rank_mu;

  sigma_ *= std::exp(std::min(1.0, (cs_ / damps_) * (ps_norm / chi_n_ - 1.0)));
}

}  // namespace quadrl
