#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "gpnn/kernels.hpp"
#include "gpnn/neighbors.hpp"
#include "gpnn/rng.hpp"

namespace gpnn {

enum class CovariateKind { kGaussianIsotropic, kUniformDisk, kUniformHypercube };

struct CovariateSpec {
  CovariateKind kind = CovariateKind::kGaussianIsotropic;
  std::size_t dim = 2;

  void validate() const;
};

/// Gaussian N(0, I/d), uniform on the unit disk (d = 2), or uniform on [0,1]^d.
PointMatrix sample_covariates(const CovariateSpec& spec, std::size_t n, RandomStream& rng);
PointMatrix sample_covariates(const CovariateSpec& spec, std::size_t n, std::uint64_t seed);

/// tanh( d^{-1/2} sum_j sin(sqrt(d) x_j) + (d/2)^{-1/2} sum_j cos(sqrt(d)(x_{2j-1} + x_{2j})) ), d even.
double regression_fn_tanh(std::size_t d, const Eigen::Ref<const Eigen::VectorXd>& x);

using PointFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

/// y = f(x) + xi, xi ~ N(0, noise(x)).
struct GpnnGenerative {
  std::string function = "tanh";  // "tanh" or "zero"
  double noise_var = 0.1;
  PointFunction noise_fn;          // optional heteroscedastic override of noise_var
  std::optional<double> holder_q = 1.0;

  double f(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double noise(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void validate(std::size_t dim) const;
};

/// y = t(x)^T b + w(x) + xi with w a zero-mean GP of variance latent_var.
struct NngpGenerative {
  Eigen::VectorXd b = Eigen::VectorXd::Ones(2);
  std::string regressors = "squares";  // "squares" (x_j^2), "linear" (x_j) or "constant" (1)
  KernelSpec latent_kernel = KernelSpec::matern(0.5);
  double lengthscale = 1.4142135623730951;
  double latent_var = 1.0;
  double noise_var = 0.1;

  Eigen::VectorXd regressors_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::size_t regressor_dim(std::size_t dim) const;
  void validate(std::size_t dim) const;
};

using GenerativeSpec = std::variant<GpnnGenerative, NngpGenerative>;

/// Responses of one local neighbourhood plus the test-point truth.
struct LocalSample {
  double truth = 0.0;      // f(x*) or t(x*)^T b + w(x*)
  double noisy = 0.0;      // truth + test noise
  Eigen::VectorXd y;       // neighbour responses
  Eigen::MatrixXd t_nb;    // m x d_T regressors (NNGP only)
  Eigen::VectorXd t_star;  // regressors at x* (NNGP only)
};

/// Keys of one simulation unit (master seed, n, replicate, point set).
struct SampleKey {
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::uint64_t replicate = 0;
  std::uint64_t point_set = 0;  // distinguishes test and calibration sets
};

/// GPnn responses: noise of training point i is a pure function of
/// (seed, n, replicate, i); test noise of point t of (key, t).
LocalSample gpnn_local_responses(const Eigen::Ref<const Eigen::VectorXd>& x_star, std::size_t test_index,
                                 const PointMatrix& neighbours, std::span<const std::size_t> neighbour_ids,
                                 const GpnnGenerative& gen, const SampleKey& key);

/// NNGP responses: the latent field is sampled jointly over {x*} and the
/// neighbours; exactly coincident points share one latent value.
LocalSample nngp_local_responses(const Eigen::Ref<const Eigen::VectorXd>& x_star, std::size_t test_index,
                                 const PointMatrix& neighbours, const NngpGenerative& gen, const SampleKey& key);

/// Neighbourhood growth m_n = min(n, ceil(C n^{2p/(2p+d)})) with C fixed by
/// m(n_max) = m_at_n_max, or a constant m when fixed_m > 0.
struct ScheduleSpec {
  double p = 0.5;
  std::size_t n_max = 100000;
  std::size_t m_at_n_max = 100;
  std::size_t fixed_m = 0;

  double exponent(std::size_t d) const { return 2.0 * p / (2.0 * p + static_cast<double>(d)); }
  double constant(std::size_t d) const;
  void validate() const;
};

std::size_t neighbourhood_schedule(const ScheduleSpec& sched, std::size_t d, std::size_t n);

}  // namespace gpnn
