#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>

#include <gtest/gtest.h>

#include "quadrl/cmaes.hpp"

namespace {

using quadrl::Cmaes;
using Eigen::VectorXd;

double sphere(const VectorXd& x) { return x.squaredNorm(); }

double ellipsoid(const VectorXd& x) {
  double s = 0.0;
  const double n = static_cast<double>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(1e6, i / (n - 1.0)) * x[i] * x[i];
  return s;
}

/// Runs until the best fitness drops below `target` or the budget is spent;
/// returns the evaluations used (or -1 on failure).
std::int64_t minimize(Cmaes& es, const std::function<double(const VectorXd&)>& f, double target,
                      std::int64_t budget) {
  while (es.evaluations() < budget) {
    const auto& pop = es.ask();
    std::vector<double> fit;
    for (const auto& x : pop) fit.push_back(f(x));
    es.tell(fit);
    if (es.best_fitness() < target) return es.evaluations();
  }
  return -1;
}

TEST(Cmaes, DefaultPopulationSize) {
  EXPECT_EQ(Cmaes::default_population(2), 6);
  EXPECT_EQ(Cmaes::default_population(10), 10);
  EXPECT_EQ(Cmaes::default_population(12), 11);
  EXPECT_EQ(Cmaes::default_population(14), 11);
  Cmaes es(VectorXd::Zero(10), 1.0, 1);
  EXPECT_EQ(es.population(), 10);
  EXPECT_EQ(es.parents(), 5);
}

TEST(Cmaes, SolvesTenDimensionalSphereWithinBudget) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    Cmaes es(VectorXd::Constant(10, 1.0), 0.5, seed);
    const auto used = minimize(es, sphere, 1e-8, 3000);
    EXPECT_GT(used, 0) << "seed " << seed << " best " << es.best_fitness();
  }
}

TEST(Cmaes, AdaptsCovarianceOnIllConditionedEllipsoid) {
  // Without covariance learning a 1e6 condition number would stall the
  // search far above the target.
  Cmaes es(VectorXd::Constant(10, 1.0), 0.5, 7);
  const auto used = minimize(es, ellipsoid, 1e-8, 30000);
  EXPECT_GT(used, 0) << "best " << es.best_fitness();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(es.covariance());
  EXPECT_GT(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff(), 1e4);
}

TEST(Cmaes, FlatFitnessLeavesMeanUnchanged) {
  Cmaes es(VectorXd::LinSpaced(6, -1, 1), 0.3, 11);
  const VectorXd before = es.mean();
  const double sigma_before = es.sigma();
  es.ask();
  es.tell(std::vector<double>(static_cast<std::size_t>(es.population()), 4.2));
  EXPECT_EQ(es.mean(), before);
  EXPECT_GT(es.sigma(), sigma_before);
}

TEST(Cmaes, IsDeterministicForFixedSeed) {
  Cmaes a(VectorXd::Constant(5, 0.7), 0.4, 99), b(VectorXd::Constant(5, 0.7), 0.4, 99);
  for (int g = 0; g < 30; ++g) {
    const auto pa = a.ask();
    const auto pb = b.ask();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) ASSERT_EQ(pa[i], pb[i]) << "gen " << g;
    std::vector<double> fa, fb;
    for (const auto& x : pa) fa.push_back(sphere(x));
    for (const auto& x : pb) fb.push_back(sphere(x));
    a.tell(fa);
    b.tell(fb);
  }
  EXPECT_EQ(a.covariance(), b.covariance());
}

TEST(Cmaes, NonFiniteFitnessRanksLast) {
  Cmaes a(VectorXd::Zero(4), 1.0, 5), b(VectorXd::Zero(4), 1.0, 5);
  const auto pa = a.ask();
  b.ask();
  std::vector<double> fa, fb;
  for (const auto& x : pa) {
    fa.push_back(sphere(x));
    fb.push_back(sphere(x));
  }
  const double huge = 1e300;
  fa[0] = std::numeric_limits<double>::quiet_NaN();
  fb[0] = huge;
  fa[1] = std::numeric_limits<double>::infinity();
  fb[1] = huge;
  a.tell(fa);
  b.tell(fb);
  EXPECT_EQ(a.mean(), b.mean());
  EXPECT_EQ(a.covariance(), b.covariance());
  EXPECT_EQ(a.sigma(), b.sigma());
}

TEST(Cmaes, BestSoFarIsMonotone) {
  Cmaes es(VectorXd::Constant(8, 2.0), 1.0, 13);
  double prev = std::numeric_limits<double>::infinity();
  for (int g = 0; g < 100; ++g) {
    const auto& pop = es.ask();
    std::vector<double> fit;
    for (const auto& x : pop) fit.push_back(ellipsoid(x));
    es.tell(fit);
    EXPECT_LE(es.best_fitness(), prev);
    EXPECT_EQ(ellipsoid(es.best_x()), es.best_fitness());
    prev = es.best_fitness();
  }
}

TEST(Cmaes, EnforcesAskTellProtocol) {
  Cmaes es(VectorXd::Zero(3), 1.0, 1);
  EXPECT_THROW(es.tell({1, 2, 3}), std::logic_error);
  es.ask();
  EXPECT_THROW(es.ask(), std::logic_error);
  EXPECT_THROW(es.tell({1.0}), std::invalid_argument);
  EXPECT_THROW(Cmaes(VectorXd::Zero(3), 0.0, 1), std::invalid_argument);
  EXPECT_THROW(Cmaes(VectorXd(), 1.0, 1), std::invalid_argument);
}

}  // namespace
