#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gpnn/errors.hpp"
#include "gpnn/synth.hpp"

using namespace gpnn;

TEST(Covariates, DeterministicPerSeed) {
  const CovariateSpec spec{CovariateKind::kGaussianIsotropic, 3};
  EXPECT_EQ(sample_covariates(spec, 100, 5), sample_covariates(spec, 100, 5));
  EXPECT_NE(sample_covariates(spec, 100, 5), sample_covariates(spec, 100, 6));
}

TEST(Covariates, GaussianMoments) {
  const std::size_t n = 100000;
  const PointMatrix x = sample_covariates({CovariateKind::kGaussianIsotropic, 4}, n, 17);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().mean();
    EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(var, 0.25, 0.05);
  }
}

TEST(Covariates, UniformDiskAreaRatio) {
  const std::size_t n = 100000;
  const PointMatrix x = sample_covariates({CovariateKind::kUniformDisk, 2}, n, 3);
  std::size_t inner = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = x.row(i).norm();
    ASSERT_LE(r, 1.0);
    inner += r <= 0.5;
  }
  const double frac = static_cast<double>(inner) / n;
  EXPECT_NEAR(frac, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / n));
  EXPECT_THROW(sample_covariates({CovariateKind::kUniformDisk, 3}, 10, 1), InputError);
}

TEST(Covariates, HypercubeRange) {
  const PointMatrix x = sample_covariates({CovariateKind::kUniformHypercube, 5}, 20000, 4);
  EXPECT_GE(x.minCoeff(), 0.0);
  EXPECT_LT(x.maxCoeff(), 1.0);
  EXPECT_NEAR(x.mean(), 0.5, 0.01);
}

TEST(TanhFunction, ValuesAndRange) {
  EXPECT_NEAR(regression_fn_tanh(2, Eigen::VectorXd::Zero(2)), std::tanh(1.0), 1e-15);
  EXPECT_NEAR(regression_fn_tanh(2, Eigen::VectorXd::Zero(2)), 0.76159, 1e-5);
  const PointMatrix x = sample_covariates({CovariateKind::kGaussianIsotropic, 4}, 2000, 8) * 5.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) EXPECT_LE(std::abs(regression_fn_tanh(4, x.row(i).transpose())), 1.0);
  EXPECT_THROW(regression_fn_tanh(3, Eigen::VectorXd::Zero(3)), InputError);
}

TEST(TanhFunction, SinTermPeriodicity) {
  // shifting x_j by 2 pi / sqrt(d) leaves sum sin(sqrt(d) x_j) unchanged; with a
  // matching shift of the paired coordinate by -2 pi / sqrt(d) so are the cos terms.
  const std::size_t d = 4;
  Eigen::VectorXd x(4);
  x << 0.3, -0.7, 1.1, 0.2;
  Eigen::VectorXd shifted = x;
  const double period = 2.0 * std::numbers::pi / std::sqrt(4.0);
  shifted(0) += period;
  shifted(1) -= period;
  EXPECT_NEAR(regression_fn_tanh(d, x), regression_fn_tanh(d, shifted), 1e-12);
  // a single-coordinate shift changes only the interaction term
  Eigen::VectorXd one = x;
  one(0) += period;
  EXPECT_NE(regression_fn_tanh(d, x), regression_fn_tanh(d, one));
}

TEST(GpnnResponses, NoiseFreeAndMoments) {
  GpnnGenerative gen;
  gen.noise_var = 0.0;
  const PointMatrix nb = sample_covariates({CovariateKind::kGaussianIsotropic, 2}, 20, 2);
  std::vector<std::size_t> ids(20);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const auto s0 = gpnn_local_responses(Eigen::VectorXd::Zero(2), 0, nb, ids, gen, {1, 100, 0, 0});
  for (Eigen::Index i = 0; i < nb.rows(); ++i) EXPECT_EQ(s0.y(i), regression_fn_tanh(2, nb.row(i).transpose()));

  gen.noise_var = 0.1;
  const std::size_t n = 100000;
  const PointMatrix big = sample_covariates({CovariateKind::kGaussianIsotropic, 2}, n, 3);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const auto s = gpnn_local_responses(Eigen::VectorXd::Zero(2), 0, big, all, gen, {1, n, 0, 0});
  double sum = 0, sq = 0;
  for (Eigen::Index i = 0; i < big.rows(); ++i) {
    const double e = s.y(i) - regression_fn_tanh(2, big.row(i).transpose());
    sum += e;
    sq += e * e;
  }
  const double var = sq / n - (sum / n) * (sum / n);
  EXPECT_NEAR(var, 0.1, 0.003);
}

TEST(GpnnResponses, KeyedStreamsIndependentOfOrder) {
  GpnnGenerative gen;
  const PointMatrix pts = sample_covariates({CovariateKind::kGaussianIsotropic, 2}, 6, 2);
  const std::vector<std::size_t> ids{10, 11, 12, 13, 14, 15};
  PointMatrix rev = pts.colwise().reverse();
  const std::vector<std::size_t> rids{15, 14, 13, 12, 11, 10};
  const SampleKey key{7, 1000, 2, 0};
  const auto a = gpnn_local_responses(Eigen::VectorXd::Zero(2), 3, pts, ids, gen, key);
  const auto b = gpnn_local_responses(Eigen::VectorXd::Zero(2), 3, rev, rids, gen, key);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(a.y(i), b.y(5 - i));
  EXPECT_EQ(a.noisy, b.noisy);
}

TEST(NngpResponses, NoLatentGivesLinearPlusNoise) {
  NngpGenerative gen;
  gen.latent_var = 0.0;
  gen.noise_var = 0.0;
  const PointMatrix nb = sample_covariates({CovariateKind::kUniformDisk, 2}, 8, 1);
  const auto s = nngp_local_responses(Eigen::VectorXd::Zero(2), 0, nb, gen, {1, 10, 0, 0});
  for (Eigen::Index i = 0; i < nb.rows(); ++i)
    EXPECT_DOUBLE_EQ(s.y(i), nb(i, 0) * nb(i, 0) + nb(i, 1) * nb(i, 1));
  EXPECT_EQ(s.truth, 0.0);
}

TEST(NngpResponses, LatentCovarianceMatchesKernel) {
  NngpGenerative gen;
  gen.regressors = "constant";
  gen.b = Eigen::VectorXd::Zero(1);
  gen.noise_var = 0.0;
  gen.latent_var = 1.3;
  PointMatrix nb(3, 2);
  nb << 0.2, 0.1, -0.5, 0.4, 0.9, -0.8;
  const Eigen::VectorXd xs = Eigen::VectorXd::Zero(2);
  const std::size_t draws = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
  for (std::size_t t = 0; t < draws; ++t) {
    const auto s = nngp_local_responses(xs, t, nb, gen, {3, 50, 0, 0});
    Eigen::Vector4d v;
    v << s.truth, s.y(0), s.y(1), s.y(2);
    acc += v * v.transpose();
  }
  acc /= static_cast<double>(draws);
  PointMatrix all(4, 2);
  all.row(0) = xs.transpose();
  all.bottomRows(3) = nb;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double ref = 1.3 * gen.latent_kernel.value((all.row(i) - all.row(j)).norm() / gen.lengthscale);
      EXPECT_NEAR(acc(i, j), ref, 0.05 * ref) << i << "," << j;
    }
}

TEST(NngpResponses, CoincidentPointsShareLatentValue) {
  NngpGenerative gen;
  gen.noise_var = 0.0;
  PointMatrix nb(3, 2);
  nb << 0.3, 0.3, 0.3, 0.3, -0.2, 0.5;
  const auto s = nngp_local_responses(Eigen::VectorXd::Constant(2, 0.3), 4, nb, gen, {1, 9, 0, 0});
  EXPECT_NEAR(s.y(0), s.y(1), 1e-5);
  EXPECT_NEAR(s.y(0), s.truth, 1e-5);
}

TEST(Schedule, PinExponentAndClamp) {
  ScheduleSpec s{0.5, 100000, 100, 0};
  EXPECT_EQ(neighbourhood_schedule(s, 2, 100000), 100u);
  EXPECT_NEAR(s.exponent(2), 1.0 / 3.0, 1e-15);
  ScheduleSpec p1{1.0, 1000000, 400, 0};
  EXPECT_DOUBLE_EQ(p1.exponent(2), 0.5);
  EXPECT_EQ(neighbourhood_schedule(p1, 2, 10000), 40u);     // 400 * (1e-2)^{1/2}
  EXPECT_EQ(neighbourhood_schedule(p1, 2, 250000), 200u);
  for (std::size_t n : {1u, 2u, 5u, 50u, 1000u, 77777u}) EXPECT_LE(neighbourhood_schedule(s, 2, n), n);
  ScheduleSpec fixed{0.5, 1, 1, 10};
  EXPECT_EQ(neighbourhood_schedule(fixed, 4, 1000), 10u);
  EXPECT_EQ(neighbourhood_schedule(fixed, 4, 3), 3u);
}
