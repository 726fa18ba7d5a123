#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "gpnn/errors.hpp"
#include "gpnn/local_gp.hpp"
#include "oracles.hpp"

using gpnn::HyperParams;
using gpnn::KernelSpec;
using gpnn::PointMatrix;

namespace {

HyperParams theta(double sx2, double sf2, double ell) {
  HyperParams t;
  t.noise_var = sx2;
  t.kernel_scale = sf2;
  t.lengthscale = ell;
  return t;
}

PointMatrix random_points(std::size_t n, std::size_t d, unsigned seed, double scale = 1.0) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> N(0.0, scale);
  PointMatrix p(n, d);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = N(g);
  return p;
}

Eigen::VectorXd random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> N;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = N(g);
  return v;
}

}  // namespace

TEST(Gamma, Values) {
  EXPECT_DOUBLE_EQ(gpnn::gamma_factor(1, theta(1, 1, 1)), 2.0);
  for (std::size_t m : {1u, 7u, 400u}) EXPECT_DOUBLE_EQ(gpnn::gamma_factor(m, theta(0, 1.3, 1)), 1.0);
  EXPECT_NEAR(gpnn::gamma_factor(100, theta(0.2, 1, 1)), 1.002, 1e-15);
  EXPECT_THROW(gpnn::gamma_factor(0, theta(0.2, 1, 1)), gpnn::InputError);
}

TEST(LocalSystem, SingleCoincidentNeighbour) {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.4);
  PointMatrix nb(1, 2);
  nb << 0.4, 0.4;
  const auto th = theta(0.3, 1.7, 0.9);
  const auto sys = gpnn::assemble_local_system(x, nb, KernelSpec::matern(1.5), th);
  EXPECT_DOUBLE_EQ(sys.gram(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(sys.cross(0), 1.7);
  Eigen::VectorXd y(1);
  y << 0.77;
  EXPECT_NEAR(gpnn::predict_gpnn(sys, y).mean, 0.77, 1e-15);
}

TEST(LocalSystem, CoincidentNeighboursGiveLimitForm) {
  const auto th = theta(0.2, 1.3, 0.5);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  const PointMatrix nb = PointMatrix::Zero(3, 3);
  const auto sys = gpnn::assemble_local_system(x, nb, KernelSpec::exponential(), th);
  EXPECT_TRUE(sys.gram.isApprox(gpnn::limit_gram(3, th), 0.0));
  const Eigen::MatrixXd ref = 0.2 * Eigen::MatrixXd::Identity(3, 3) + 1.3 * Eigen::MatrixXd::Ones(3, 3);
  EXPECT_EQ((sys.gram - ref).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LocalSystem, SymmetricWithNoiseFloor) {
  for (unsigned t = 0; t < 30; ++t) {
    const auto th = theta(0.05 + 0.01 * t, 1.0 + 0.1 * t, 0.3 + 0.05 * t);
    const PointMatrix nb = random_points(20, 2, t);
    const auto sys = gpnn::assemble_local_system(Eigen::VectorXd::Zero(2), nb, KernelSpec::matern(2.5), th);
    EXPECT_EQ((sys.gram - sys.gram.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const double lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.gram).eigenvalues().minCoeff();
    EXPECT_GE(lam, th.noise_var - 1e-10);
  }
}

TEST(Predict, CoincidentNeighboursAverageAndLimitVariance) {
  const auto th = theta(0.2, 1.3, 0.5);
  const std::size_t m = 6;
  const Eigen::VectorXd y = random_vector(m, 3);
  const auto sys = gpnn::assemble_local_system(Eigen::VectorXd::Zero(2), PointMatrix::Zero(m, 2),
                                               KernelSpec::matern(0.5), th);
  const auto pd = gpnn::predict_gpnn(sys, y);
  const double gamma = gpnn::gamma_factor(m, th);
  EXPECT_NEAR(pd.mean, y.mean(), 1e-13);
  EXPECT_NEAR(pd.variance, th.noise_var * (1.0 + 1.0 / (m * gamma)), 1e-13);
}

TEST(Predict, GpnnMatchesExplicitInverse) {
  for (unsigned t = 0; t < 40; ++t) {
    const std::size_t m = 8;
    const auto th = theta(0.1 + 0.02 * t, 0.5 + 0.05 * t, 0.4 + 0.03 * t);
    const auto k = t % 2 ? KernelSpec::matern(1.5) : KernelSpec::squared_exponential();
    const PointMatrix nb = random_points(m, 2, 100 + t, 0.5);
    const Eigen::VectorXd x = random_vector(2, 300 + t) * 0.2;
    const Eigen::VectorXd y = random_vector(m, 500 + t);
    const auto sys = gpnn::assemble_local_system(x, nb, k, th);
    const auto pd = gpnn::predict_gpnn(sys, y);

    const Eigen::MatrixXd inv = oracle::inverse(oracle::gram(nb, k, th.kernel_scale, th.lengthscale, th.noise_var));
    const Eigen::VectorXd ks = oracle::cross(nb, x, k, th.kernel_scale, th.lengthscale);
    const double gamma = (th.noise_var + m * th.kernel_scale) / (m * th.kernel_scale);
    EXPECT_LT(oracle::rel_err(pd.mean, gamma * ks.dot(inv * y)), 1e-10);
    EXPECT_LT(oracle::rel_err(pd.variance, th.noise_var + th.kernel_scale - ks.dot(inv * ks)), 1e-10);

    gpnn::PredictOptions raw;
    raw.gamma_correction = false;
    EXPECT_LT(oracle::rel_err(gpnn::predict_gpnn(sys, y, raw).mean, ks.dot(inv * y)), 1e-10);
    raw.include_noise = false;
    EXPECT_NEAR(gpnn::predict_gpnn(sys, y, raw).variance, pd.variance - th.noise_var, 1e-12);
  }
}

TEST(Predict, NngpMatchesExplicitInverse) {
  for (unsigned t = 0; t < 40; ++t) {
    const std::size_t m = 3 + t % 12, dt = 1 + t % 3;
    auto th = theta(0.1 + 0.01 * t, 1.0, 0.8);
    th.b = random_vector(dt, 700 + t);
    const auto k = KernelSpec::matern(0.5);
    const PointMatrix nb = random_points(m, 2, 100 + t, 0.5);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    const Eigen::VectorXd y = random_vector(m, 800 + t);
    Eigen::MatrixXd tn(m, dt);
    for (Eigen::Index i = 0; i < tn.size(); ++i) tn.data()[i] = std::sin(1.0 + i + t);
    const Eigen::VectorXd ts = random_vector(dt, 900 + t);
    const auto sys = gpnn::assemble_local_system(x, nb, k, th);
    const auto pd = gpnn::predict_nngp(sys, y, ts, tn, th);

    const Eigen::MatrixXd inv = oracle::inverse(oracle::gram(nb, k, th.kernel_scale, th.lengthscale, th.noise_var));
    const Eigen::VectorXd ks = oracle::cross(nb, x, k, th.kernel_scale, th.lengthscale);
    const double gamma = (th.noise_var + m * th.kernel_scale) / (m * th.kernel_scale);
    const double ref = ts.dot(th.b) + gamma * ks.dot(inv * (y - tn * th.b));
    EXPECT_LT(std::abs(pd.mean - ref) / std::max(1.0, std::abs(ref)), 1e-10);
    EXPECT_LT(oracle::rel_err(pd.variance, th.noise_var + th.kernel_scale - ks.dot(inv * ks)), 1e-10);
  }
}

TEST(Predict, NngpReductions) {
  const std::size_t m = 5;
  auto th = theta(0.2, 1.0, 1.0);
  const auto k = KernelSpec::matern(0.5);
  const PointMatrix nb = random_points(m, 2, 4);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd y = random_vector(m, 5);
  const auto sys = gpnn::assemble_local_system(x, nb, k, th);
  // b = 0 reduces to the GPnn mean
  th.b = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd tn = Eigen::MatrixXd::Random(m, 2);
  Eigen::VectorXd ts = Eigen::VectorXd::Random(2);
  EXPECT_NEAR(gpnn::predict_nngp(sys, y, ts, tn, th).mean, gpnn::predict_gpnn(sys, y).mean, 1e-14);
  // linear field with coincident regressors returns t*^T b
  th.b << 0.7, -1.1;
  ts << 0.3, 0.9;
  tn = ts.transpose().replicate(m, 1);
  const Eigen::VectorXd lin = tn * th.b;
  EXPECT_NEAR(gpnn::predict_nngp(sys, lin, ts, tn, th).mean, ts.dot(th.b), 1e-14);
  EXPECT_THROW(gpnn::predict_nngp(sys, y, Eigen::VectorXd::Zero(3), tn, th), gpnn::InputError);
}

TEST(Predict, VarianceBracket) {
  for (unsigned t = 0; t < 50; ++t) {
    const auto th = theta(0.01 + 0.02 * t, 1.0 + 0.02 * t, 0.2 + 0.1 * t);
    const PointMatrix nb = random_points(1 + t % 25, 3, t, std::pow(10.0, -3.0 + 0.08 * t));
    const auto pd = gpnn::predict_gpnn(
        gpnn::assemble_local_system(Eigen::VectorXd::Zero(3), nb, KernelSpec::matern(2.5), th),
        Eigen::VectorXd::Zero(nb.rows()));
    EXPECT_GE(pd.variance, th.noise_var);
    EXPECT_LE(pd.variance, th.noise_var + th.kernel_scale);
  }
}

TEST(Predict, JitterOnlyWithoutNoise) {
  const PointMatrix nb = PointMatrix::Zero(3, 1);  // singular without noise
  const auto sys0 = gpnn::assemble_local_system(Eigen::VectorXd::Zero(1), nb, KernelSpec::matern(1.5), theta(0, 1, 1));
  EXPECT_GT(sys0.jitter, 0.0);
  const auto sys1 = gpnn::assemble_local_system(Eigen::VectorXd::Zero(1), nb, KernelSpec::matern(1.5), theta(0.1, 1, 1));
  EXPECT_EQ(sys1.jitter, 0.0);
  EXPECT_THROW(gpnn::predict_gpnn(sys1, Eigen::VectorXd::Zero(2)), gpnn::InputError);
}

TEST(LimitMatrices, InverseAndNorms) {
  for (std::size_t m : {1u, 2u, 5u, 40u}) {
    const auto th = theta(0.3, 1.2, 1.0);
    const Eigen::MatrixXd k = gpnn::limit_gram(m, th);
    const Eigen::MatrixXd inv = gpnn::limit_inverse(m, th);
    EXPECT_LT((k * inv - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((inv - oracle::inverse(k)).cwiseAbs().maxCoeff() / inv.cwiseAbs().maxCoeff(), 1e-10);
    const double n1 = k.cwiseAbs().colwise().sum().maxCoeff();
    EXPECT_NEAR(n1, th.noise_var + m * th.kernel_scale, 1e-12);
    // ||K_inf^{-1}||_1 = (1 + (m - 2) a) / sigma_xi^2 with a = sf2 / (sx2 + m sf2); it equals
    // 1 / ||K_inf||_1 (condition number one) only for m = 1.
    const double a = th.kernel_scale / (th.noise_var + m * th.kernel_scale);
    const double inv1 = inv.cwiseAbs().colwise().sum().maxCoeff();
    EXPECT_NEAR(inv1, (1.0 + (static_cast<double>(m) - 2.0) * a) / th.noise_var, 1e-12);
    if (m == 1)
      EXPECT_NEAR(n1 * inv1, 1.0, 1e-12);
    else
      EXPECT_GT(n1 * inv1, 1.0 + 1e-3);
  }
  EXPECT_THROW(gpnn::limit_inverse(3, theta(0.0, 1, 1)), gpnn::InputError);
}

TEST(LimitMatrices, CoincidentGramInverseMatchesClosedForm) {
  const auto th = theta(0.15, 0.9, 2.0);
  const auto sys = gpnn::assemble_local_system(Eigen::VectorXd::Zero(2), PointMatrix::Zero(7, 2),
                                               KernelSpec::squared_exponential(), th);
  const Eigen::MatrixXd num = sys.chol.solve(Eigen::MatrixXd::Identity(7, 7));
  const Eigen::MatrixXd cf = gpnn::limit_inverse(7, th);
  EXPECT_LT((num - cf).cwiseAbs().maxCoeff() / cf.cwiseAbs().maxCoeff(), 1e-10);
}
