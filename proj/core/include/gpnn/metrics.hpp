#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace gpnn {

struct PointScores {
  double se = 0.0;
  double cal = 0.0;
  double nll = 0.0;
};

struct MetricSummary {
  double mse = 0.0;
  double cal = 0.0;
  double nll = 0.0;
  std::size_t n_test = 0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  std::size_t points_used = 0;
};

struct RiskEntry {
  std::size_t n = 0;
  std::size_t m = 0;
  double risk = 0.0;
  double std_err = 0.0;
};

struct RiskCurve {
  std::vector<RiskEntry> entries;  // sorted by n
  SlopeFit fit;
  double stone_exponent = 0.0;
};

inline constexpr std::size_t kDefaultSlopeTail = 8;

PointScores pointwise_scores(double y, double mean, double variance);

/// Means of se / cal / nll over (y*, mean, variance) triples.
MetricSummary empirical_metrics(std::span<const double> y, std::span<const double> mean,
                                std::span<const double> variance);

/// OLS of log10(risk) on log10(n) over the `tail` largest n.  R^2 is 1 when
/// the tail has zero total variance.
SlopeFit fit_loglog_slope(std::span<const double> n, std::span<const double> risk,
                          std::size_t tail = kDefaultSlopeTail);

/// Fits the slope of an existing curve in place.
void fit_curve(RiskCurve& curve, std::size_t tail = kDefaultSlopeTail);

/// Mean and standard error (sample sd / sqrt(k)) of replicate values.
std::pair<double, double> mean_and_stderr(std::span<const double> values);

}  // namespace gpnn
