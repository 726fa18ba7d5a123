#include "gpnn/hyperfit.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "gpnn/local_gp.hpp"
#include "gpnn/parallel.hpp"
#include "gpnn/rng.hpp"

namespace gpnn {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

struct BlockTerm {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
};

// Log marginal likelihood of one block and, optionally, its gradient
// w.r.t. the log-parameters.
BlockTerm block_term(const HyperParams& theta, const DataBlock& blk, const KernelSpec& kernel, bool want_grad) {
  const Eigen::Index n = blk.x.rows();
  if (blk.y.size() != n) throw InputError("block_mll: block x/y size mismatch");
  const double sf2 = theta.kernel_scale, sx2 = theta.noise_var, ell = theta.lengthscale;

  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd dist;
  if (want_grad) dist = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (blk.x.row(i) - blk.x.row(j)).norm();
      corr(i, j) = corr(j, i) = kernel.value(d / ell);
      if (want_grad) dist(i, j) = dist(j, i) = d;
    }
  Eigen::MatrixXd k = sf2 * corr;
  const double jitter = sx2 < kJitterThreshold ? kJitterScale * sf2 : 0.0;
  k.diagonal().array() += sx2 + jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw NumericError("block_mll: Cholesky factorisation failed");

  const Eigen::VectorXd alpha = llt.solve(blk.y);
  const Eigen::MatrixXd& L = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));

  BlockTerm out;
  out.value = -0.5 * (blk.y.dot(alpha) + logdet + static_cast<double>(n) * kLog2Pi);
  if (!std::isfinite(out.value)) throw NumericError("block_mll: non-finite likelihood");
  if (!want_grad) return out;

  // W = alpha alpha^T - K^{-1};  dL/dtheta = 1/2 tr(W dK/dtheta)
  Eigen::MatrixXd w = -llt.solve(Eigen::MatrixXd::Identity(n, n));
  w.noalias() += alpha * alpha.transpose();

  const double d_noise = 0.5 * w.trace();
  const double d_scale = 0.5 * (w.cwiseProduct(corr)).sum();  // dK/dsf2 = C
  double d_ell = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = dist(i, j);
      if (d == 0.0) continue;
      const double dk = -(sf2 / (ell * ell)) * d * kernel.derivative(d / ell);
      d_ell += w(i, j) * dk;  // symmetric pair counted once, times 2 below
    }
  d_ell *= 2.0 * 0.5;
  out.grad << sx2 * d_noise, sf2 * d_scale, ell * d_ell;
  return out;
}

MllEvaluation evaluate(const HyperParams& theta, std::span<const DataBlock> blocks, const KernelSpec& kernel,
                       std::size_t threads, bool want_grad) {
  theta.validate();
  if (blocks.empty()) throw InputError("block_mll: no data blocks");
  std::vector<BlockTerm> terms(blocks.size());
  parallel_for(blocks.size(), threads,
               [&](std::size_t b) { terms[b] = block_term(theta, blocks[b], kernel, want_grad); });
  MllEvaluation out;
  for (const auto& t : terms) {  // fixed order keeps sums thread-count independent
    out.value += t.value;
    out.grad += t.grad;
  }
  return out;
}

}  // namespace

BlockPartition block_partition(std::size_t n, std::size_t num_blocks, std::size_t block_size, std::uint64_t seed) {
  if (num_blocks == 0 || block_size == 0) throw InputError("block_partition: B and n_B must be positive");
  if (num_blocks > n / block_size) throw InputError("block_partition: B * n_B exceeds n");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RandomStream rng(seed, StreamTag::kBlockPartition, {});
  // partial Fisher-Yates: only the first B * n_B slots are needed
  const std::size_t take = num_blocks * block_size;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t span = n - i;
    const std::size_t j = i + std::uniform_int_distribution<std::size_t>(0, span - 1)(rng);
    std::swap(perm[i], perm[j]);
  }
  BlockPartition part;
  part.seed = seed;
  part.blocks.resize(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b)
    part.blocks[b].assign(perm.begin() + b * block_size, perm.begin() + (b + 1) * block_size);
  return part;
}

std::vector<DataBlock> gather_blocks(const PointMatrix& x, const Eigen::VectorXd& y, const BlockPartition& part) {
  if (x.rows() != y.size()) throw InputError("gather_blocks: x/y size mismatch");
  std::vector<DataBlock> out;
  out.reserve(part.blocks.size());
  for (const auto& idx : part.blocks) {
    DataBlock blk;
    blk.x = gather_rows(x, idx);
    blk.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) blk.y(static_cast<Eigen::Index>(k)) = y(static_cast<Eigen::Index>(idx[k]));
    out.push_back(std::move(blk));
  }
  return out;
}

double block_mll(const HyperParams& theta, std::span<const DataBlock> blocks, const KernelSpec& kernel,
                 std::size_t threads) {
  return evaluate(theta, blocks, kernel, threads, false).value;
}

Eigen::Vector3d block_mll_grad(const HyperParams& theta, std::span<const DataBlock> blocks, const KernelSpec& kernel,
                               std::size_t threads) {
  return evaluate(theta, blocks, kernel, threads, true).grad;
}

MllEvaluation block_mll_value_grad(const HyperParams& theta, std::span<const DataBlock> blocks,
                                   const KernelSpec& kernel, std::size_t threads) {
  return evaluate(theta, blocks, kernel, threads, true);
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("fit: learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw InputError("fit: Adam betas must lie in (0, 1)");
  if (!(adam_eps > 0.0)) throw InputError("fit: adam_eps must be positive");
  init.validate();
  if (!(init.noise_var > 0.0)) throw InputError("fit: initial noise_var must be positive (log-space optimisation)");
}

HyperParams initial_hyperparams(std::span<const DataBlock> blocks) {
  if (blocks.empty() || blocks.front().x.rows() < 2) throw InputError("initial_hyperparams: first block needs >= 2 points");
  const auto& x = blocks.front().x;
  std::vector<double> d;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) d.push_back((x.row(i) - x.row(j)).norm());
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + mid));

  double sum = 0.0, sq = 0.0, count = 0.0;
  for (const auto& b : blocks) {
    sum += b.y.sum();
    sq += b.y.squaredNorm();
    count += static_cast<double>(b.y.size());
  }
  const double mean = sum / count;
  double var = sq / count - mean * mean;
  if (!(var > 0.0)) var = 1.0;

  HyperParams theta;
  theta.lengthscale = med > 0.0 ? med : 1.0;
  theta.kernel_scale = var;
  theta.noise_var = 0.1 * var;
  return theta;
}

FitResult fit_hyperparams(std::span<const DataBlock> blocks, const KernelSpec& kernel, const FitConfig& cfg) {
  cfg.validate();
  Eigen::Vector3d z(std::log(cfg.init.noise_var), std::log(cfg.init.kernel_scale), std::log(cfg.init.lengthscale));
  Eigen::Vector3d m1 = Eigen::Vector3d::Zero(), m2 = Eigen::Vector3d::Zero();
  FitResult res;
  res.trace.reserve(cfg.iterations);
  auto theta_of = [&](const Eigen::Vector3d& v) {
    HyperParams t = cfg.init;
    t.noise_var = std::exp(v(0));
    t.kernel_scale = std::exp(v(1));
    t.lengthscale = std::exp(v(2));
    return t;
  };
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    MllEvaluation ev;
    try {
      ev = block_mll_value_grad(theta_of(z), blocks, kernel, cfg.threads);
    } catch (const NumericError& e) {
      throw FitError(std::string("fit_hyperparams: iteration ") + std::to_string(it) + ": " + e.what(), res.trace);
    } catch (const InputError& e) {
      throw FitError(std::string("fit_hyperparams: iteration ") + std::to_string(it) + ": " + e.what(), res.trace);
    }
    if (!ev.grad.allFinite()) throw FitError("fit_hyperparams: non-finite gradient", res.trace);
    res.trace.push_back(ev.value);
    b1t *= cfg.adam_beta1;
    b2t *= cfg.adam_beta2;
    m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * ev.grad;
    m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * ev.grad.cwiseAbs2();
    const Eigen::Vector3d mhat = m1 / (1.0 - b1t);
    const Eigen::Vector3d vhat = m2 / (1.0 - b2t);
    z.array() += cfg.learning_rate * mhat.array() / (vhat.array().sqrt() + cfg.adam_eps);
  }
  res.theta = cfg.iterations == 0 ? cfg.init : theta_of(z);
  return res;
}

}  // namespace gpnn
