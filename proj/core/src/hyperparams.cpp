#include "gpnn/hyperparams.hpp"

#include <cmath>

#include "gpnn/errors.hpp"

namespace gpnn {

void HyperParams::validate() const {
  if (!(kernel_scale > 0.0) || !std::isfinite(kernel_scale)) throw InputError("kernel_scale must be positive");
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) throw InputError("lengthscale must be positive");
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) throw InputError("noise_var must be nonnegative");
  if (!b.allFinite()) throw InputError("b must be finite");
}

bool same_kernel_params(const HyperParams& a, const HyperParams& b) noexcept {
  return a.noise_var == b.noise_var && a.kernel_scale == b.kernel_scale && a.lengthscale == b.lengthscale;
}

}  // namespace gpnn
