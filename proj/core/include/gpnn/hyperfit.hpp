#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "gpnn/errors.hpp"
#include "gpnn/hyperparams.hpp"
#include "gpnn/kernels.hpp"
#include "gpnn/neighbors.hpp"

namespace gpnn {

struct BlockPartition {
  std::vector<std::vector<std::size_t>> blocks;
  std::uint64_t seed = 0;
};

struct DataBlock {
  PointMatrix x;
  Eigen::VectorXd y;
};

/// B disjoint blocks of n_B indices drawn uniformly from [0, n).
BlockPartition block_partition(std::size_t n, std::size_t num_blocks, std::size_t block_size, std::uint64_t seed);

std::vector<DataBlock> gather_blocks(const PointMatrix& x, const Eigen::VectorXd& y, const BlockPartition& part);

/// Sum over blocks of the exact GP log marginal likelihood.
double block_mll(const HyperParams& theta, std::span<const DataBlock> blocks, const KernelSpec& kernel,
                 std::size_t threads = 1);

/// Gradient of block_mll w.r.t. (log noise_var, log kernel_scale, log lengthscale).
Eigen::Vector3d block_mll_grad(const HyperParams& theta, std::span<const DataBlock> blocks, const KernelSpec& kernel,
                               std::size_t threads = 1);

struct MllEvaluation {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
};

MllEvaluation block_mll_value_grad(const HyperParams& theta, std::span<const DataBlock> blocks,
                                   const KernelSpec& kernel, std::size_t threads = 1);

struct FitConfig {
  double learning_rate = 0.05;
  std::size_t iterations = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  HyperParams init;
  std::size_t threads = 1;

  void validate() const;
};

struct FitResult {
  HyperParams theta;
  std::vector<double> trace;  // objective at each iterate before its update
};

/// Numeric failure during fitting; carries the objective trace so far.
class FitError : public NumericError {
 public:
  FitError(const std::string& what, std::vector<double> trace) : NumericError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Median-heuristic starting point: lengthscale = median pairwise distance in
/// the first block, kernel_scale = var(y), noise_var = 0.1 var(y).
HyperParams initial_hyperparams(std::span<const DataBlock> blocks);

/// Adam ascent on block_mll in log-parameter space.  b is carried over from
/// cfg.init unchanged.
FitResult fit_hyperparams(std::span<const DataBlock> blocks, const KernelSpec& kernel, const FitConfig& cfg);

}  // namespace gpnn
