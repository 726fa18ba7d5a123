#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gpnn/hyperparams.hpp"
#include "gpnn/kernels.hpp"
#include "gpnn/neighbors.hpp"

namespace gpnn {

/// Diagonal jitter policy: below this noise variance, kJitterScale * sigma_f^2
/// is added to the diagonal before factorising.
inline constexpr double kJitterThreshold = 1e-10;
inline constexpr double kJitterScale = 1e-10;

struct LocalSystem {
  Eigen::MatrixXd gram;       // K_N (without jitter)
  Eigen::VectorXd cross;      // k*_N
  double gamma = 1.0;
  double jitter = 0.0;        // added to the diagonal before factorisation
  Eigen::LLT<Eigen::MatrixXd> chol;
  double noise_var = 0.0;
  double kernel_scale = 1.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(cross.size()); }
};

struct PredictiveDistribution {
  double mean = 0.0;
  double variance = 0.0;
  double gamma = 1.0;
  double jitter = 0.0;
};

struct PredictOptions {
  bool gamma_correction = true;
  /// When false the variance omits sigma_xi^2 (latent-function variance);
  /// diagnostic only, the default predictive variance includes the noise.
  bool include_noise = true;
};

double gamma_factor(std::size_t m, const HyperParams& theta);

/// Builds K_N and k*_N from explicit neighbour coordinates (m x d) and
/// factorises K_N.  Throws NumericError if the factorisation fails.
LocalSystem assemble_local_system(const Eigen::Ref<const Eigen::VectorXd>& x_star, const PointMatrix& neighbours,
                                  const KernelSpec& kernel, const HyperParams& theta);

LocalSystem assemble_local_system(const Eigen::Ref<const Eigen::VectorXd>& x_star, const NeighborSet& ns,
                                  const PointMatrix& points, const KernelSpec& kernel, const HyperParams& theta);

PredictiveDistribution predict_gpnn(const LocalSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& responses,
                                    const PredictOptions& opts = {});

PredictiveDistribution predict_nngp(const LocalSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& responses,
                                    const Eigen::Ref<const Eigen::VectorXd>& t_star,
                                    const Eigen::Ref<const Eigen::MatrixXd>& t_neighbours, const HyperParams& theta,
                                    const PredictOptions& opts = {});

/// K_inf = sigma_xi^2 I + sigma_f^2 11^T, the Gram matrix of m coincident points.
Eigen::MatrixXd limit_gram(std::size_t m, const HyperParams& theta);

/// Closed-form inverse of limit_gram (Sherman-Morrison); needs sigma_xi^2 > 0.
Eigen::MatrixXd limit_inverse(std::size_t m, const HyperParams& theta);

}  // namespace gpnn
