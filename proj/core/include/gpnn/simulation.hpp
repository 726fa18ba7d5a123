#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpnn/calibration.hpp"
#include "gpnn/hyperparams.hpp"
#include "gpnn/kernels.hpp"
#include "gpnn/metrics.hpp"
#include "gpnn/synth.hpp"

namespace gpnn {

/// Everything needed to simulate prediction at a list of hyperparameters:
/// the data-generating process, the regression kernel and the protocol sizes.
struct SimulationSetup {
  CovariateSpec covariates;
  GenerativeSpec generative = GpnnGenerative{};
  KernelSpec kernel = KernelSpec::matern(0.5);
  std::size_t n_test = 2000;
  std::size_t replicates = 3;
  std::uint64_t seed = 0;
  ScheduleSpec schedule;
  bool gamma_correction = true;
  bool latent_variance = false;  // report sigma_f^2 - k^T K^{-1} k (diagnostic)
  std::size_t threads = 1;

  bool is_nngp() const noexcept { return std::holds_alternative<NngpGenerative>(generative); }
  void validate() const;
};

/// Per-point outputs of one replicate for one hyperparameter setting.
struct PointPredictions {
  std::vector<double> mean, variance, truth, noisy;
};

/// Predictions at `n_points` test locations of point set `point_set` for each
/// Theta in `thetas`, sharing training data, neighbourhoods and sampled
/// responses (common random numbers).  Local systems are factorised once per
/// distinct kernel parameter triple.
std::vector<PointPredictions> simulate_points(const SimulationSetup& setup, std::size_t n, std::size_t m,
                                              std::size_t replicate, std::uint64_t point_set, std::size_t n_points,
                                              std::span<const HyperParams> thetas);

struct ThetaRisk {
  double risk = 0.0;           // mean over replicates of MSE against the latent truth
  double std_err = 0.0;
  double noisy_mse = 0.0;      // against noisy test responses
  double mean_variance = 0.0;  // mean predictive variance
  MetricSummary noisy_metrics;  // replicate-averaged MSE/CAL/NLL against noisy responses
  std::vector<double> replicate_risk;
};

std::vector<ThetaRisk> simulate_risks(const SimulationSetup& setup, std::size_t n, std::span<const HyperParams> thetas);

struct RateExperiment {
  SimulationSetup setup;
  HyperParams theta;
  std::vector<std::size_t> n_grid;
  std::size_t slope_tail = kDefaultSlopeTail;
  /// Smoothness alpha of the regression target used for 2 alpha / (2p + d);
  /// defaults to nu_gen (NNGP) or holder_q (GPnn) when unset (<= 0).
  double smoothness = 0.0;

  double stone_exponent() const;
  /// true when the schedule's p exceeds 1 (outside the theory's coverage).
  bool beyond_theory() const { return setup.schedule.fixed_m == 0 && setup.schedule.p > 1.0; }
  void validate() const;
};

RiskCurve run_rate_experiment(const RateExperiment& exp);

enum class HyperAxis { kLengthscale, kKernelScale, kNoiseVar, kB };

std::string axis_name(HyperAxis axis);
HyperAxis parse_axis(const std::string& name);

/// Theta with coordinate `axis` set to `value` (the b axis sets every entry).
HyperParams with_axis(const HyperParams& theta, HyperAxis axis, double value);

struct LandscapeRow {
  HyperAxis axis = HyperAxis::kLengthscale;
  double value = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  double risk = 0.0;
  double std_err = 0.0;
};

struct LandscapeResult {
  std::vector<LandscapeRow> rows;
  std::vector<std::pair<std::size_t, double>> range_by_n;  // peak-to-trough risk range
};

LandscapeResult risk_landscape_sweep(const RateExperiment& exp, HyperAxis axis, std::span<const double> values);

/// (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / (12 h)
double five_point_stencil(const std::function<double(double)>& f, double x, double h);

struct DerivativeRow {
  std::size_t n = 0;
  std::size_t m = 0;
  double step = 0.0;
  double derivative = 0.0;
  double std_err = 0.0;
};

struct DerivativeCurve {
  HyperAxis axis = HyperAxis::kLengthscale;
  std::vector<DerivativeRow> rows;
  SlopeFit fit;  // log10 |derivative| vs log10 n
};

/// Stencil derivative of the risk along `axis` with absolute step h at every
/// n of the grid.  For the b axis the derivative is directional along
/// (1,...,1)/sqrt(d_T).
DerivativeCurve finite_diff_derivative(const RateExperiment& exp, HyperAxis axis, double h);

/// Several axes at once with relative steps h = rel_step * phi (|b| for the b
/// axis), reusing each simulated neighbourhood for every stencil point.
std::vector<DerivativeCurve> derivative_experiment(const RateExperiment& exp, std::span<const HyperAxis> axes,
                                                   double rel_step);

struct CalibrationExperiment {
  SimulationSetup setup;
  HyperParams theta;
  std::size_t n = 10000;
  std::size_t n_cal = 2000;
  // setup.n_test is the size of the independent test set
};

struct CalibrationReplicate {
  CalibrationResult calibration;
  MetricSummary cal_set_after;
  MetricSummary test_before;
  MetricSummary test_after;
  double max_mean_change = 0.0;  // |mu(alpha Theta) - mu(Theta)| over test points
};

struct CalibrationExperimentResult {
  std::size_t m = 0;
  std::vector<CalibrationReplicate> replicates;
  MetricSummary test_before_mean, test_after_mean, cal_after_mean;
  double alpha_mean = 0.0;
  double test_cal_after_sd = 0.0;
};

CalibrationExperimentResult run_calibration_experiment(const CalibrationExperiment& exp);

struct PointwiseLimitResult {
  std::size_t n = 0;
  std::size_t m = 0;
  double gamma = 1.0;
  double noisy_mse = 0.0;
  double noisy_mse_limit = 0.0;     // sigma_xi^2 (1 + 1/m)
  double mean_variance = 0.0;
  double variance_limit = 0.0;      // sigma_hat_xi^2 (1 + 1/(m Gamma))
};

/// Fixed-m large-n experiment comparing against the pointwise limits; requires
/// a GPnn generative model with constant noise.
PointwiseLimitResult run_pointwise_limit(const SimulationSetup& setup, const HyperParams& theta, std::size_t n);

}  // namespace gpnn
