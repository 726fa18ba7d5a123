#include <gtest/gtest.h>

#include <cmath>

#include "gpnn/errors.hpp"
#include "gpnn/simulation.hpp"

using namespace gpnn;

namespace {

RateExperiment small_nngp(std::vector<std::size_t> grid, std::size_t n_test = 400) {
  RateExperiment e;
  e.setup.covariates = {CovariateKind::kUniformDisk, 2};
  e.setup.generative = NngpGenerative{};
  e.setup.kernel = KernelSpec::matern(0.5);
  e.setup.n_test = n_test;
  e.setup.replicates = 2;
  e.setup.seed = 11;
  e.setup.schedule = {0.5, grid.back(), 30, 0};
  e.theta.noise_var = 0.1;
  e.theta.lengthscale = std::sqrt(2.0);
  e.theta.b = Eigen::VectorXd::Ones(2);
  e.n_grid = std::move(grid);
  return e;
}

}  // namespace

TEST(Stencil, ExactForCubics) {
  const auto f = [](double x) { return x * x * x; };
  for (double x : {-1.3, 0.2, 2.0, 7.5}) EXPECT_NEAR(five_point_stencil(f, x, 0.1), 3 * x * x, 1e-10);
  const auto q = [](double x) { return x * x * x * x - 2 * x; };
  EXPECT_NEAR(five_point_stencil(q, 1.5, 0.05), 4 * 1.5 * 1.5 * 1.5 - 2, 1e-10);
}

TEST(Axes, NamesAndWithAxis) {
  for (auto a : {HyperAxis::kLengthscale, HyperAxis::kKernelScale, HyperAxis::kNoiseVar, HyperAxis::kB})
    EXPECT_EQ(parse_axis(axis_name(a)), a);
  EXPECT_THROW(parse_axis("nonsense"), InputError);
  HyperParams t;
  t.b = Eigen::VectorXd::Ones(3);
  EXPECT_EQ(with_axis(t, HyperAxis::kLengthscale, 2.5).lengthscale, 2.5);
  EXPECT_EQ(with_axis(t, HyperAxis::kKernelScale, 0.7).kernel_scale, 0.7);
  EXPECT_EQ(with_axis(t, HyperAxis::kNoiseVar, 0.3).noise_var, 0.3);
  EXPECT_TRUE(with_axis(t, HyperAxis::kB, 0.4).b.isApprox(Eigen::VectorXd::Constant(3, 0.4)));
}

TEST(RateExperiment, StoneExponentsAndFlags) {
  auto e = small_nngp({500, 1000});
  EXPECT_NEAR(e.stone_exponent(), 1.0 / 3.0, 1e-15);
  EXPECT_FALSE(e.beyond_theory());
  auto g = std::get<NngpGenerative>(e.setup.generative);
  g.latent_kernel = KernelSpec::matern(1.5);
  e.setup.generative = g;
  e.setup.kernel = KernelSpec::matern(1.5);
  e.setup.schedule.p = 1.5;
  EXPECT_NEAR(e.stone_exponent(), 0.6, 1e-15);
  EXPECT_TRUE(e.beyond_theory());

  RateExperiment gp;
  gp.setup.covariates = {CovariateKind::kGaussianIsotropic, 4};
  gp.setup.kernel = KernelSpec::matern(1.0);
  gp.setup.schedule = {1.0, 100000, 100, 0};
  EXPECT_NEAR(gp.stone_exponent(), 1.0 / 3.0, 1e-15);
}

TEST(RateExperiment, DeterministicAndThreadIndependent) {
  auto e = small_nngp({400, 800, 1600});
  const RiskCurve a = run_rate_experiment(e);
  e.setup.threads = 8;
  const RiskCurve b = run_rate_experiment(e);
  ASSERT_EQ(a.entries.size(), 3u);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].risk, b.entries[i].risk);
    EXPECT_EQ(a.entries[i].std_err, b.entries[i].std_err);
    EXPECT_EQ(a.entries[i].m, neighbourhood_schedule(e.setup.schedule, 2, a.entries[i].n));
  }
  EXPECT_EQ(a.fit.slope, b.fit.slope);
  EXPECT_LT(a.fit.slope, 0.0);
  e.setup.seed = 12;
  EXPECT_NE(run_rate_experiment(e).entries[0].risk, a.entries[0].risk);
}

TEST(RateExperiment, RejectsInconsistentSetup) {
  auto e = small_nngp({400, 800});
  e.theta.b = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(run_rate_experiment(e), InputError);
  auto f = small_nngp({400, 800});
  f.n_grid.clear();
  EXPECT_THROW(run_rate_experiment(f), InputError);
}

TEST(Landscape, SinglePointMatchesRateCurve) {
  const auto e = small_nngp({600, 1200});
  const std::vector<double> v{e.theta.lengthscale};
  const auto land = risk_landscape_sweep(e, HyperAxis::kLengthscale, v);
  const auto curve = run_rate_experiment(e);
  ASSERT_EQ(land.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(land.rows[i].n, curve.entries[i].n);
    EXPECT_DOUBLE_EQ(land.rows[i].risk, curve.entries[i].risk);
  }
}

TEST(Landscape, FlattensWithNAndBAxisIsFlat) {
  auto e = small_nngp({500, 20000}, 1000);
  const std::vector<double> ell{0.3, 1.0, 3.0, 6.0};
  const auto le = risk_landscape_sweep(e, HyperAxis::kLengthscale, ell);
  ASSERT_EQ(le.range_by_n.size(), 2u);
  EXPECT_LT(le.range_by_n[1].second, le.range_by_n[0].second);
  const std::vector<double> b{0.5, 1.0, 1.5};
  const auto lb = risk_landscape_sweep(e, HyperAxis::kB, b);
  EXPECT_LT(lb.range_by_n[1].second, le.range_by_n[1].second);
}

TEST(Derivatives, ExperimentMatchesSingleAxisStencil) {
  const auto e = small_nngp({500, 1000});
  const std::vector<HyperAxis> axes{HyperAxis::kLengthscale, HyperAxis::kNoiseVar};
  const auto curves = derivative_experiment(e, axes, 0.05);
  ASSERT_EQ(curves.size(), 2u);
  const auto one = finite_diff_derivative(e, HyperAxis::kLengthscale, 0.05 * e.theta.lengthscale);
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_NEAR(curves[0].rows[i].derivative, one.rows[i].derivative, 1e-12);
    EXPECT_DOUBLE_EQ(curves[0].rows[i].step, 0.05 * e.theta.lengthscale);
  }
  EXPECT_DOUBLE_EQ(curves[1].rows[0].step, 0.05 * e.theta.noise_var);
}

TEST(PointwiseLimit, FixedMApproachesLimits) {
  SimulationSetup s;
  s.covariates = {CovariateKind::kGaussianIsotropic, 2};
  s.kernel = KernelSpec::matern(1.5);
  s.n_test = 1000;
  s.replicates = 2;
  s.seed = 5;
  s.schedule.fixed_m = 10;
  HyperParams th;
  th.noise_var = 0.1;
  th.kernel_scale = 1.0;
  th.lengthscale = 0.5;
  const auto r = run_pointwise_limit(s, th, 30000);
  EXPECT_EQ(r.m, 10u);
  EXPECT_NEAR(r.noisy_mse_limit, 0.11, 1e-15);
  EXPECT_NEAR(r.variance_limit, 0.1 * (1 + 1 / (10 * r.gamma)), 1e-15);
  EXPECT_NEAR(r.noisy_mse / r.noisy_mse_limit, 1.0, 0.1);
  EXPECT_NEAR(r.mean_variance / r.variance_limit, 1.0, 0.05);
}

TEST(CalibrationExperiment, CalibrationSetIsExactlyCalibrated) {
  CalibrationExperiment ce;
  ce.setup.covariates = {CovariateKind::kUniformDisk, 2};
  ce.setup.generative = NngpGenerative{};
  ce.setup.kernel = KernelSpec::matern(0.5);
  ce.setup.n_test = 600;
  ce.setup.replicates = 2;
  ce.setup.seed = 3;
  ce.setup.schedule.fixed_m = 15;
  ce.theta.noise_var = 0.2;
  ce.theta.kernel_scale = 1.5;
  ce.theta.lengthscale = 1.5 * std::sqrt(2.0);
  ce.theta.b = Eigen::VectorXd::Constant(2, 0.5);
  ce.n = 3000;
  ce.n_cal = 500;
  const auto r = run_calibration_experiment(ce);
  ASSERT_EQ(r.replicates.size(), 2u);
  for (const auto& rep : r.replicates) {
    EXPECT_NEAR(rep.cal_set_after.cal, 1.0, 1e-10);
    EXPECT_LT(rep.max_mean_change, 1e-10);
    EXPECT_NEAR(rep.test_after.cal, rep.test_before.cal / rep.calibration.alpha, 1e-10);
  }
  EXPECT_LT(r.alpha_mean, 1.0);  // overdispersed prior theta: variances shrink
}
