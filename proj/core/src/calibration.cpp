#include "gpnn/calibration.hpp"

#include <cmath>

#include "gpnn/errors.hpp"

namespace gpnn {

CalibrationResult calibration_alpha(std::span<const double> residuals, std::span<const double> variances) {
  if (residuals.empty()) throw InputError("calibration_alpha: empty calibration set");
  if (residuals.size() != variances.size()) throw InputError("calibration_alpha: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (!(variances[i] > 0.0)) throw InputError("calibration_alpha: variances must be positive");
    sum += residuals[i] * residuals[i] / variances[i];
  }
  CalibrationResult out;
  out.n_cal = residuals.size();
  out.pre_cal = sum / static_cast<double>(residuals.size());
  if (!(out.pre_cal > 0.0) || !std::isfinite(out.pre_cal))
    throw NumericError("calibration_alpha: degenerate residuals (alpha would be zero)");
  out.alpha = out.pre_cal;
  double post = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i)
    post += residuals[i] * residuals[i] / (out.alpha * variances[i]);
  out.post_cal = post / static_cast<double>(residuals.size());
  return out;
}

HyperParams apply_calibration(const HyperParams& theta, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("apply_calibration: alpha must be positive");
  HyperParams out = theta;
  out.kernel_scale *= alpha;
  out.noise_var *= alpha;
  return out;
}

}  // namespace gpnn
