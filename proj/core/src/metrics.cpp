#include "gpnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gpnn/errors.hpp"

namespace gpnn {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

PointScores pointwise_scores(double y, double mean, double variance) {
  if (!(variance > 0.0)) throw InputError("pointwise_scores: variance must be positive");
  PointScores s;
  const double r = y - mean;
  s.se = r * r;
  s.cal = s.se / variance;
  s.nll = 0.5 * (std::log(variance) + s.cal + kLog2Pi);
  return s;
}

MetricSummary empirical_metrics(std::span<const double> y, std::span<const double> mean,
                                std::span<const double> variance) {
  if (y.empty()) throw InputError("empirical_metrics: empty input");
  if (y.size() != mean.size() || y.size() != variance.size())
    throw InputError("empirical_metrics: length mismatch");
  MetricSummary out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const PointScores s = pointwise_scores(y[i], mean[i], variance[i]);
    out.mse += s.se;
    out.cal += s.cal;
    out.nll += s.nll;
  }
  const double n = static_cast<double>(y.size());
  out.mse /= n;
  out.cal /= n;
  out.nll /= n;
  out.n_test = y.size();
  return out;
}

SlopeFit fit_loglog_slope(std::span<const double> n, std::span<const double> risk, std::size_t tail) {
  if (n.size() != risk.size()) throw InputError("fit_loglog_slope: length mismatch");
  if (tail < 2) throw InputError("fit_loglog_slope: tail must be at least 2");
  std::vector<std::size_t> order(n.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return n[a] < n[b]; });
  const std::size_t k = std::min(tail, n.size());
  if (k < 2) throw InputError("fit_loglog_slope: need at least two points");

  std::vector<double> lx, ly;
  for (std::size_t i = n.size() - k; i < n.size(); ++i) {
    const std::size_t j = order[i];
    if (!(n[j] > 0.0)) throw InputError("fit_loglog_slope: n must be positive");
    if (!(risk[j] > 0.0) || !std::isfinite(risk[j])) throw InputError("fit_loglog_slope: risk must be positive");
    lx.push_back(std::log10(n[j]));
    ly.push_back(std::log10(risk[j]));
  }
  const double kd = static_cast<double>(k);
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / kd;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / kd;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InputError("fit_loglog_slope: tail needs at least two distinct n");
  SlopeFit fit;
  fit.points_used = k;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += e * e;
  }
  // relative guard: a constant series can leave roundoff in syy
  fit.r_squared = syy <= 1e-28 * std::max(1.0, my * my) ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  if (syy <= 1e-28 * std::max(1.0, my * my)) fit.slope = 0.0;
  return fit;
}

void fit_curve(RiskCurve& curve, std::size_t tail) {
  std::vector<double> n, r;
  for (const auto& e : curve.entries) {
    n.push_back(static_cast<double>(e.n));
    r.push_back(e.risk);
  }
  curve.fit = fit_loglog_slope(n, r, tail);
}

std::pair<double, double> mean_and_stderr(std::span<const double> values) {
  if (values.empty()) throw InputError("mean_and_stderr: empty input");
  const double k = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (k - 1.0) / k)};
}

}  // namespace gpnn
