#pragma once

#include <cstddef>
#include <span>

#include "gpnn/hyperparams.hpp"

namespace gpnn {

struct CalibrationResult {
  double alpha = 1.0;
  std::size_t n_cal = 0;
  double pre_cal = 0.0;
  double post_cal = 0.0;
};

/// alpha = mean(r_i^2 / s_i^2); post_cal is the CAL after scaling every
/// variance by alpha.
CalibrationResult calibration_alpha(std::span<const double> residuals, std::span<const double> variances);

/// Scales kernel_scale and noise_var by alpha.
HyperParams apply_calibration(const HyperParams& theta, double alpha);

}  // namespace gpnn
