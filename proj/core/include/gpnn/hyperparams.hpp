#pragma once

#include <Eigen/Core>

namespace gpnn {

/// Regression hyperparameters (noise variance, kernel scale, lengthscale and
/// the NNGP regression coefficients; b is empty for GPnn).
struct HyperParams {
  double noise_var = 0.1;
  double kernel_scale = 1.0;
  double lengthscale = 1.0;
  Eigen::VectorXd b;

  /// Throws InputError unless kernel_scale > 0, lengthscale > 0, noise_var >= 0.
  void validate() const;
};

bool same_kernel_params(const HyperParams& a, const HyperParams& b) noexcept;

}  // namespace gpnn
