#include "gpnn/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpnn/errors.hpp"
#include "gpnn/local_gp.hpp"
#include "gpnn/parallel.hpp"

namespace gpnn {

void SimulationSetup::validate() const {
  covariates.validate();
  schedule.validate();
  if (n_test == 0) throw InputError("simulation: n_test must be positive");
  if (replicates == 0) throw InputError("simulation: replicates must be positive");
  std::visit([&](const auto& g) { g.validate(covariates.dim); }, generative);
}

namespace {

void check_theta(const SimulationSetup& setup, const HyperParams& theta) {
  theta.validate();
  if (const auto* g = std::get_if<NngpGenerative>(&setup.generative)) {
    if (static_cast<std::size_t>(theta.b.size()) != g->regressor_dim(setup.covariates.dim))
      throw InputError("simulation: |b_hat| does not match the NNGP regressor dimension");
  }
}

// Thetas grouped by identical kernel parameters so each group shares a factorisation.
std::vector<std::vector<std::size_t>> kernel_groups(std::span<const HyperParams> thetas) {
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return same_kernel_params(thetas[g.front()], thetas[i]); });
    if (it == groups.end())
      groups.push_back({i});
    else
      it->push_back(i);
  }
  return groups;
}

}  // namespace

std::vector<PointPredictions> simulate_points(const SimulationSetup& setup, std::size_t n, std::size_t m,
                                              std::size_t replicate, std::uint64_t point_set, std::size_t n_points,
                                              std::span<const HyperParams> thetas) {
  setup.validate();
  if (thetas.empty()) throw InputError("simulate_points: no hyperparameters given");
  for (const auto& t : thetas) check_theta(setup, t);
  if (m == 0 || m > n) throw InputError("simulate_points: need 1 <= m <= n");
  if (n_points == 0) throw InputError("simulate_points: no test points");

  RandomStream train_rng(setup.seed, StreamTag::kTrainCovariates, {n, replicate});
  RandomStream test_rng(setup.seed, StreamTag::kTestCovariates, {n, replicate, point_set});
  const KnnIndex index(sample_covariates(setup.covariates, n, train_rng));
  const PointMatrix test = sample_covariates(setup.covariates, n_points, test_rng);
  const SampleKey key{setup.seed, n, replicate, point_set};
  const auto groups = kernel_groups(thetas);
  const PredictOptions opts{setup.gamma_correction, !setup.latent_variance};

  std::vector<PointPredictions> out(thetas.size());
  for (auto& p : out) {
    p.mean.resize(n_points);
    p.variance.resize(n_points);
    p.truth.resize(n_points);
    p.noisy.resize(n_points);
  }

  parallel_for(n_points, setup.threads, [&](std::size_t t) {
    const Eigen::VectorXd x = test.row(static_cast<Eigen::Index>(t)).transpose();
    const NeighborSet ns = index.knn(x, m);
    const PointMatrix nb = gather_rows(index.points(), ns.indices);
    LocalSample s;
    if (const auto* g = std::get_if<GpnnGenerative>(&setup.generative))
      s = gpnn_local_responses(x, t, nb, ns.indices, *g, key);
    else
      s = nngp_local_responses(x, t, nb, std::get<NngpGenerative>(setup.generative), key);
    for (const auto& group : groups) {
      const LocalSystem sys = assemble_local_system(x, nb, setup.kernel, thetas[group.front()]);
      for (std::size_t k : group) {
        const PredictiveDistribution pd = setup.is_nngp()
                                              ? predict_nngp(sys, s.y, s.t_star, s.t_nb, thetas[k], opts)
                                              : predict_gpnn(sys, s.y, opts);
        out[k].mean[t] = pd.mean;
        out[k].variance[t] = pd.variance;
        out[k].truth[t] = s.truth;
        out[k].noisy[t] = s.noisy;
      }
    }
  });
  return out;
}

std::vector<ThetaRisk> simulate_risks(const SimulationSetup& setup, std::size_t n, std::span<const HyperParams> thetas) {
  const std::size_t m = neighbourhood_schedule(setup.schedule, setup.covariates.dim, n);
  const std::size_t k = thetas.size();
  std::vector<std::vector<double>> risk(k), noisy(k), var(k);
  std::vector<MetricSummary> metrics(k);
  for (std::size_t r = 0; r < setup.replicates; ++r) {
    const auto preds = simulate_points(setup, n, m, r, 0, setup.n_test, thetas);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& p = preds[i];
      double se = 0.0, se_noisy = 0.0, v = 0.0;
      for (std::size_t t = 0; t < p.mean.size(); ++t) {
        se += (p.truth[t] - p.mean[t]) * (p.truth[t] - p.mean[t]);
        se_noisy += (p.noisy[t] - p.mean[t]) * (p.noisy[t] - p.mean[t]);
        v += p.variance[t];
      }
      const double nt = static_cast<double>(p.mean.size());
      risk[i].push_back(se / nt);
      noisy[i].push_back(se_noisy / nt);
      var[i].push_back(v / nt);
      const MetricSummary ms = empirical_metrics(p.noisy, p.mean, p.variance);
      metrics[i].mse += ms.mse;
      metrics[i].cal += ms.cal;
      metrics[i].nll += ms.nll;
      metrics[i].n_test += ms.n_test;
    }
  }
  std::vector<ThetaRisk> out(k);
  const double reps = static_cast<double>(setup.replicates);
  for (std::size_t i = 0; i < k; ++i) {
    std::tie(out[i].risk, out[i].std_err) = mean_and_stderr(risk[i]);
    out[i].noisy_mse = mean_and_stderr(noisy[i]).first;
    out[i].mean_variance = mean_and_stderr(var[i]).first;
    out[i].noisy_metrics = metrics[i];
    out[i].noisy_metrics.mse /= reps;
    out[i].noisy_metrics.cal /= reps;
    out[i].noisy_metrics.nll /= reps;
    out[i].replicate_risk = std::move(risk[i]);
  }
  return out;
}

double RateExperiment::stone_exponent() const {
  double alpha = smoothness;
  if (!(alpha > 0.0)) {
    if (const auto* g = std::get_if<NngpGenerative>(&setup.generative)) {
      alpha = std::isfinite(g->latent_kernel.nu()) ? g->latent_kernel.nu() : 1.0;
    } else {
      alpha = std::get<GpnnGenerative>(setup.generative).holder_q.value_or(1.0);
    }
  }
  const double p = setup.schedule.fixed_m > 0 ? setup.kernel.holder_p() : setup.schedule.p;
  return 2.0 * alpha / (2.0 * p + static_cast<double>(setup.covariates.dim));
}

void RateExperiment::validate() const {
  setup.validate();
  check_theta(setup, theta);
  if (n_grid.empty()) throw InputError("rate experiment: empty n grid");
  for (std::size_t n : n_grid)
    if (n == 0) throw InputError("rate experiment: n values must be positive");
  if (slope_tail < 2) throw InputError("rate experiment: slope tail must be at least 2");
}

namespace {

std::vector<std::size_t> sorted_grid(const std::vector<std::size_t>& grid) {
  std::vector<std::size_t> g = grid;
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace

RiskCurve run_rate_experiment(const RateExperiment& exp) {
  exp.validate();
  RiskCurve curve;
  const std::vector<HyperParams> thetas{exp.theta};
  for (std::size_t n : sorted_grid(exp.n_grid)) {
    const ThetaRisk tr = simulate_risks(exp.setup, n, thetas).front();
    curve.entries.push_back({n, neighbourhood_schedule(exp.setup.schedule, exp.setup.covariates.dim, n), tr.risk,
                             tr.std_err});
  }
  curve.stone_exponent = exp.stone_exponent();
  if (curve.entries.size() >= 2) fit_curve(curve, exp.slope_tail);
  return curve;
}

std::string axis_name(HyperAxis axis) {
  switch (axis) {
    case HyperAxis::kLengthscale:
      return "lengthscale";
    case HyperAxis::kKernelScale:
      return "kernel_scale";
    case HyperAxis::kNoiseVar:
      return "noise_var";
    case HyperAxis::kB:
      return "b";
  }
  return "?";
}

HyperAxis parse_axis(const std::string& name) {
  if (name == "lengthscale") return HyperAxis::kLengthscale;
  if (name == "kernel_scale") return HyperAxis::kKernelScale;
  if (name == "noise_var") return HyperAxis::kNoiseVar;
  if (name == "b") return HyperAxis::kB;
  throw InputError("unknown hyperparameter axis '" + name + "' (lengthscale|kernel_scale|noise_var|b)");
}

HyperParams with_axis(const HyperParams& theta, HyperAxis axis, double value) {
  HyperParams t = theta;
  switch (axis) {
    case HyperAxis::kLengthscale:
      t.lengthscale = value;
      break;
    case HyperAxis::kKernelScale:
      t.kernel_scale = value;
      break;
    case HyperAxis::kNoiseVar:
      t.noise_var = value;
      break;
    case HyperAxis::kB:
      if (t.b.size() == 0) throw InputError("b axis requires a non-empty b_hat");
      t.b.setConstant(value);
      break;
  }
  return t;
}

LandscapeResult risk_landscape_sweep(const RateExperiment& exp, HyperAxis axis, std::span<const double> values) {
  exp.validate();
  if (values.empty()) throw InputError("landscape: empty value grid");
  std::vector<HyperParams> thetas;
  for (double v : values) thetas.push_back(with_axis(exp.theta, axis, v));
  LandscapeResult res;
  for (std::size_t n : sorted_grid(exp.n_grid)) {
    const auto risks = simulate_risks(exp.setup, n, thetas);
    const std::size_t m = neighbourhood_schedule(exp.setup.schedule, exp.setup.covariates.dim, n);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
      res.rows.push_back({axis, values[i], n, m, risks[i].risk, risks[i].std_err});
      lo = std::min(lo, risks[i].risk);
      hi = std::max(hi, risks[i].risk);
    }
    res.range_by_n.emplace_back(n, hi - lo);
  }
  return res;
}

double five_point_stencil(const std::function<double(double)>& f, double x, double h) {
  if (!(h > 0.0)) throw InputError("five_point_stencil: h must be positive");
  return (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
}

namespace {

struct AxisStep {
  HyperAxis axis;
  double h;
};

double axis_value(const HyperParams& t, HyperAxis axis) {
  switch (axis) {
    case HyperAxis::kLengthscale:
      return t.lengthscale;
    case HyperAxis::kKernelScale:
      return t.kernel_scale;
    case HyperAxis::kNoiseVar:
      return t.noise_var;
    case HyperAxis::kB:
      return 0.0;
  }
  return 0.0;
}

// Theta moved by s along `axis`; the b axis moves along (1,...,1)/sqrt(d_T).
HyperParams shifted(const HyperParams& theta, HyperAxis axis, double s) {
  if (axis != HyperAxis::kB) return with_axis(theta, axis, axis_value(theta, axis) + s);
  if (theta.b.size() == 0) throw InputError("derivative: b axis requires a non-empty b_hat");
  HyperParams t = theta;
  t.b.array() += s / std::sqrt(static_cast<double>(theta.b.size()));
  return t;
}

std::vector<DerivativeCurve> stencil_curves(const RateExperiment& exp, const std::vector<AxisStep>& steps) {
  exp.validate();
  constexpr double kOffsets[4] = {2.0, 1.0, -1.0, -2.0};
  constexpr double kWeights[4] = {-1.0, 8.0, -8.0, 1.0};
  std::vector<HyperParams> thetas;
  for (const auto& st : steps) {
    if (!(st.h > 0.0)) throw InputError("derivative: step h must be positive");
    const double lowest = axis_value(exp.theta, st.axis) - 2.0 * st.h;
    const bool bad = st.axis == HyperAxis::kNoiseVar ? lowest < 0.0 : (st.axis != HyperAxis::kB && lowest <= 0.0);
    if (bad)
      throw InputError("derivative: phi - 2h must stay positive for " + axis_name(st.axis));
    for (double o : kOffsets) thetas.push_back(shifted(exp.theta, st.axis, o * st.h));
  }
  std::vector<DerivativeCurve> curves(steps.size());
  for (std::size_t a = 0; a < steps.size(); ++a) curves[a].axis = steps[a].axis;
  std::vector<double> ns;
  for (std::size_t n : sorted_grid(exp.n_grid)) {
    const auto risks = simulate_risks(exp.setup, n, thetas);
    const std::size_t m = neighbourhood_schedule(exp.setup.schedule, exp.setup.covariates.dim, n);
    ns.push_back(static_cast<double>(n));
    for (std::size_t a = 0; a < steps.size(); ++a) {
      const double denom = 12.0 * steps[a].h;
      std::vector<double> per_rep(exp.setup.replicates, 0.0);
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t r = 0; r < per_rep.size(); ++r)
          per_rep[r] += kWeights[j] * risks[4 * a + j].replicate_risk[r] / denom;
      const auto [mean, se] = mean_and_stderr(per_rep);
      curves[a].rows.push_back({n, m, steps[a].h, mean, se});
    }
  }
  if (ns.size() >= 2) {
    for (auto& c : curves) {
      std::vector<double> mag;
      for (const auto& r : c.rows) mag.push_back(std::abs(r.derivative));
      c.fit = fit_loglog_slope(ns, mag, exp.slope_tail);
    }
  }
  return curves;
}

}  // namespace

DerivativeCurve finite_diff_derivative(const RateExperiment& exp, HyperAxis axis, double h) {
  return stencil_curves(exp, {{axis, h}}).front();
}

std::vector<DerivativeCurve> derivative_experiment(const RateExperiment& exp, std::span<const HyperAxis> axes,
                                                   double rel_step) {
  if (!(rel_step > 0.0 && rel_step < 0.5)) throw InputError("derivative: relative step must lie in (0, 0.5)");
  std::vector<AxisStep> steps;
  for (HyperAxis a : axes) {
    double scale = a == HyperAxis::kB ? exp.theta.b.norm() : axis_value(exp.theta, a);
    if (!(scale > 0.0)) scale = 1.0;
    steps.push_back({a, rel_step * scale});
  }
  return stencil_curves(exp, steps);
}

CalibrationExperimentResult run_calibration_experiment(const CalibrationExperiment& exp) {
  const SimulationSetup& s = exp.setup;
  s.validate();
  check_theta(s, exp.theta);
  if (exp.n_cal == 0) throw InputError("calibration experiment: n_cal must be positive");
  CalibrationExperimentResult res;
  res.m = neighbourhood_schedule(s.schedule, s.covariates.dim, exp.n);
  std::vector<double> test_cal_after;
  for (std::size_t r = 0; r < s.replicates; ++r) {
    CalibrationReplicate rep;
    const std::vector<HyperParams> base{exp.theta};
    const auto cal = simulate_points(s, exp.n, res.m, r, 1, exp.n_cal, base).front();
    std::vector<double> resid(cal.mean.size());
    for (std::size_t t = 0; t < resid.size(); ++t) resid[t] = cal.noisy[t] - cal.mean[t];
    rep.calibration = calibration_alpha(resid, cal.variance);
    const HyperParams scaled = apply_calibration(exp.theta, rep.calibration.alpha);

    const std::vector<HyperParams> after{scaled};
    const auto cal2 = simulate_points(s, exp.n, res.m, r, 1, exp.n_cal, after).front();
    rep.cal_set_after = empirical_metrics(cal2.noisy, cal2.mean, cal2.variance);

    const std::vector<HyperParams> both{exp.theta, scaled};
    const auto test = simulate_points(s, exp.n, res.m, r, 0, s.n_test, both);
    rep.test_before = empirical_metrics(test[0].noisy, test[0].mean, test[0].variance);
    rep.test_after = empirical_metrics(test[1].noisy, test[1].mean, test[1].variance);
    for (std::size_t t = 0; t < test[0].mean.size(); ++t)
      rep.max_mean_change = std::max(rep.max_mean_change, std::abs(test[0].mean[t] - test[1].mean[t]));

    res.alpha_mean += rep.calibration.alpha;
    auto acc = [](MetricSummary& a, const MetricSummary& b) {
      a.mse += b.mse;
      a.cal += b.cal;
      a.nll += b.nll;
      a.n_test += b.n_test;
    };
    acc(res.test_before_mean, rep.test_before);
    acc(res.test_after_mean, rep.test_after);
    acc(res.cal_after_mean, rep.cal_set_after);
    test_cal_after.push_back(rep.test_after.cal);
    res.replicates.push_back(rep);
  }
  const double k = static_cast<double>(s.replicates);
  res.alpha_mean /= k;
  for (MetricSummary* ms : {&res.test_before_mean, &res.test_after_mean, &res.cal_after_mean}) {
    ms->mse /= k;
    ms->cal /= k;
    ms->nll /= k;
  }
  res.test_cal_after_sd = mean_and_stderr(test_cal_after).second * std::sqrt(k);
  return res;
}

PointwiseLimitResult run_pointwise_limit(const SimulationSetup& setup, const HyperParams& theta, std::size_t n) {
  setup.validate();
  const auto* g = std::get_if<GpnnGenerative>(&setup.generative);
  if (!g || g->noise_fn) throw InputError("pointwise limit: requires a GPnn generative model with constant noise");
  if (setup.schedule.fixed_m == 0) throw InputError("pointwise limit: requires a fixed neighbourhood size");
  PointwiseLimitResult res;
  res.n = n;
  res.m = neighbourhood_schedule(setup.schedule, setup.covariates.dim, n);
  res.gamma = gamma_factor(res.m, theta);
  const std::vector<HyperParams> thetas{theta};
  const ThetaRisk tr = simulate_risks(setup, n, thetas).front();
  const double md = static_cast<double>(res.m);
  res.noisy_mse = tr.noisy_mse;
  res.noisy_mse_limit = g->noise_var * (1.0 + 1.0 / md);
  res.mean_variance = tr.mean_variance;
  res.variance_limit = theta.noise_var * (1.0 + 1.0 / (md * res.gamma));
  return res;
}

}  // namespace gpnn
