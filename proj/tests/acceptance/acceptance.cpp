// Acceptance runner: one PASS/FAIL line per criterion, INFO lines for diagnostics.
// Exit status is nonzero iff a criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gpnn/parallel.hpp"
#include "gpnn/selfcheck.hpp"
#include "gpnn/simulation.hpp"

using namespace gpnn;

namespace {

int failures = 0;
std::size_t threads = 1;

void report(bool ok, const std::string& id, const std::string& text) {
  if (!ok) ++failures;
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), text.c_str());
  std::fflush(stdout);
}

void info(const std::string& id, const std::string& text) {
  std::printf("INFO %s: %s\n", id.c_str(), text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::size_t> grid_to_1e5() {
  std::vector<std::size_t> g;
  for (int i = 0; i < 12; ++i) g.push_back(static_cast<std::size_t>(std::llround(std::pow(10.0, 2 + 3.0 * i / 11))));
  return g;
}

HyperParams nngp_true_theta() {
  HyperParams t;
  t.noise_var = 0.1;
  t.kernel_scale = 1.0;
  t.lengthscale = std::sqrt(2.0);
  t.b = Eigen::VectorXd::Ones(2);
  return t;
}

HyperParams nngp_mismatched_theta() {
  HyperParams t;
  t.noise_var = 0.2;
  t.kernel_scale = 1.5;
  t.lengthscale = 1.5 * std::sqrt(2.0);
  t.b = Eigen::VectorXd::Constant(2, 0.5);
  return t;
}

RateExperiment nngp_disk(double nu) {
  RateExperiment e;
  e.setup.covariates = {CovariateKind::kUniformDisk, 2};
  NngpGenerative g;
  g.latent_kernel = KernelSpec::matern(nu);
  e.setup.generative = g;
  e.setup.kernel = KernelSpec::matern(nu);
  e.setup.schedule.p = nu;
  e.setup.schedule.n_max = 100000;
  e.setup.schedule.m_at_n_max = 100;
  e.setup.n_test = 2000;
  e.setup.replicates = 3;
  e.setup.seed = 42;
  e.setup.threads = threads;
  e.theta = nngp_true_theta();
  e.n_grid = grid_to_1e5();
  return e;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion1() {
  for (double nu : {0.5, 1.5}) {
    const auto t0 = std::chrono::steady_clock::now();
    const RateExperiment e = nngp_disk(nu);
    const RiskCurve c = run_rate_experiment(e);
    const double target = nu / (nu + 1.0);
    const bool ok = std::abs(-c.fit.slope - target) <= 0.06 && c.fit.r_squared >= 0.95;
    report(ok, fmt("1 nngp-disk nu=%.1f", nu),
           fmt("slope %.4f (|slope| target %.4f +- 0.06), R2 %.4f (>= 0.95), %zu points, %.1fs", c.fit.slope, target,
               c.fit.r_squared, c.fit.points_used, seconds_since(t0)));
  }
}

void criterion2_3() {
  auto t0 = std::chrono::steady_clock::now();
  RateExperiment e;
  e.setup.covariates = {CovariateKind::kGaussianIsotropic, 4};
  GpnnGenerative g;
  g.noise_var = 0.1;
  e.setup.generative = g;
  e.setup.kernel = KernelSpec::matern(1.0);
  e.setup.schedule.p = 1.0;
  e.setup.seed = 42;
  e.setup.threads = threads;
  e.theta.noise_var = 0.2;
  e.theta.kernel_scale = 1.0;
  e.theta.lengthscale = 0.5;
  e.n_grid = grid_to_1e5();
  const RiskCurve c = run_rate_experiment(e);
  const bool ok = std::abs(-c.fit.slope - 1.0 / 3.0) <= 0.06 && c.fit.r_squared >= 0.95;
  report(ok, "2 gpnn-gauss d=4 matern-1",
         fmt("slope %.4f (|slope| target 0.3333 +- 0.06), R2 %.4f (>= 0.95), %.1fs", c.fit.slope, c.fit.r_squared,
             seconds_since(t0)));

  t0 = std::chrono::steady_clock::now();
  SimulationSetup s = e.setup;
  s.covariates = {CovariateKind::kGaussianIsotropic, 2};
  s.schedule.fixed_m = 10;
  const PointwiseLimitResult r = run_pointwise_limit(s, e.theta, 100000);
  const double e_mse = std::abs(r.noisy_mse / r.noisy_mse_limit - 1.0);
  const double e_var = std::abs(r.mean_variance / r.variance_limit - 1.0);
  report(e_mse <= 0.05, "3a pointwise MSE m=10 n=1e5",
         fmt("noisy MSE %.5f vs limit %.5f, rel. dev %.4f (<= 0.05)", r.noisy_mse, r.noisy_mse_limit, e_mse));
  report(e_var <= 0.05, "3b pointwise variance m=10 n=1e5",
         fmt("mean variance %.5f vs limit %.5f, rel. dev %.4f (<= 0.05), %.1fs", r.mean_variance, r.variance_limit,
             e_var, seconds_since(t0)));
}

CalibrationExperimentResult calibration_run(bool latent) {
  CalibrationExperiment e;
  e.setup.covariates = {CovariateKind::kUniformDisk, 2};
  e.setup.generative = NngpGenerative{};
  e.setup.kernel = KernelSpec::matern(0.5);
  e.setup.schedule.p = 0.5;
  e.setup.schedule.n_max = 1000000;
  e.setup.schedule.m_at_n_max = 100;
  e.setup.n_test = 8000;
  e.setup.replicates = 4;
  e.setup.seed = 7;
  e.setup.threads = threads;
  e.setup.latent_variance = latent;
  e.theta = nngp_mismatched_theta();
  e.n = 10000;
  e.n_cal = 2000;
  return run_calibration_experiment(e);
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = calibration_run(false);
  const double cal_err = std::abs(r.cal_after_mean.cal - 1.0);
  report(cal_err <= 1e-8, "4a CAL on calibration set",
         fmt("%.15f, |CAL - 1| %.3g (<= 1e-8), alpha %.4f, m %zu", r.cal_after_mean.cal, cal_err, r.alpha_mean, r.m));
  const double tc = r.test_after_mean.cal;
  report(tc >= 0.95 && tc <= 1.12, "4b CAL on independent test",
         fmt("%.4f -> %.4f (sd over replicates %.4f), target [0.95, 1.12]", r.test_before_mean.cal, tc,
             r.test_cal_after_sd));
  const double drop = r.test_before_mean.nll - r.test_after_mean.nll;
  report(drop >= 0.8, "4c NLL decrease",
         fmt("%.4f -> %.4f, drop %.4f (>= 0.8), %.1fs", r.test_before_mean.nll, r.test_after_mean.nll, drop,
             seconds_since(t0)));

  const auto l = calibration_run(true);
  info("4 latent-variance convention",
       fmt("sigma*^2 = sf2 - k^T K^-1 k: alpha %.4f, test CAL %.4f -> %.4f, NLL %.4f -> %.4f (drop %.4f)",
           l.alpha_mean, l.test_before_mean.cal, l.test_after_mean.cal, l.test_before_mean.nll, l.test_after_mean.nll,
           l.test_before_mean.nll - l.test_after_mean.nll));
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  RateExperiment e = nngp_disk(0.5);
  e.theta = nngp_mismatched_theta();
  const std::vector<HyperAxis> axes{HyperAxis::kLengthscale, HyperAxis::kKernelScale, HyperAxis::kNoiseVar,
                                    HyperAxis::kB};
  const auto curves = derivative_experiment(e, axes, 0.02);
  for (const auto& c : curves) {
    const double mag = -c.fit.slope;
    if (c.axis == HyperAxis::kB) {
      report(mag > 0.5, "5 derivative b",
             fmt("slope %.4f (|slope| > 0.5), R2 %.4f", c.fit.slope, c.fit.r_squared));
    } else {
      report(std::abs(mag - 1.0 / 3.0) <= 0.10, "5 derivative " + axis_name(c.axis),
             fmt("slope %.4f (|slope| target 0.3333 +- 0.10), R2 %.4f", c.fit.slope, c.fit.r_squared));
    }
  }
  info("5 timing", fmt("%.1fs", seconds_since(t0)));
}

void suite_line(const std::string& id, const SuiteResult& s) {
  report(s.passed(), id,
         fmt("%s: %zu cases, %zu failures, worst %.3g (tolerance %.3g)%s%s", s.name.c_str(), s.cases, s.failures,
             s.worst, s.tolerance, s.detail.empty() ? "" : "; ", s.detail.c_str()));
}

void criterion6() {
  const std::uint64_t seed = 42;
  suite_line("6a matrix inequalities", check_matrix_inequalities(500, seed));
  const SuiteResult cond = check_conditioned_perturbation(500, seed);
  info("6a conditioned bound",
       fmt("%s: %zu cases, %zu failures, worst %.3g; %s", cond.name.c_str(), cond.cases, cond.failures, cond.worst,
           cond.detail.c_str()));
  suite_line("6b kernel bounds",
             check_kernel_bounds({KernelSpec::exponential(), KernelSpec::squared_exponential(), KernelSpec::matern(0.5),
                                  KernelSpec::matern(0.75), KernelSpec::matern(1.5), KernelSpec::matern(2.5)}));
  suite_line("6c mll gradients", check_mll_gradients(50, seed));
  suite_line("6d predictor oracle", check_predictor_oracle(200, seed));
  suite_line("6e calibration invariance", check_calibration_invariance(200, seed));
  suite_line("6f thread determinism", check_thread_determinism(seed, 8));
}

}  // namespace

int main() {
  threads = default_thread_count();
  info("setup", fmt("%zu worker threads", threads));
  const auto t0 = std::chrono::steady_clock::now();
  criterion6();
  criterion1();
  criterion2_3();
  criterion4();
  criterion5();
  info("total", fmt("%d failing criteria, %.1fs", failures, seconds_since(t0)));
  return failures == 0 ? 0 : 1;
}
