#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gpnn/kernels.hpp"

namespace gpnn {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;      // worst observed error / bound violation statistic
  double tolerance = 0.0;
  std::string detail;

  bool passed() const noexcept { return cases > 0 && failures == 0; }
};

/// eps_E <= 4 eps_m, eps_E2 <= 2 eps_E and the shifted-Gram perturbation bound
/// ||K^{-1}k - sf2 Kinf^{-1} 1||_1 / ||sf2 Kinf^{-1} 1||_1 <= (eps_m + eps_E) / (1 - eps_E)
/// (plus the row-vector and K^{-2} variants) on random local systems; `worst`
/// is the largest lhs/rhs ratio.
SuiteResult check_matrix_inequalities(std::size_t instances, std::uint64_t seed);

/// Same deviations against the textbook perturbation bound that keeps the
/// condition number of the limit matrix (which exceeds 1 once m >= 2).
SuiteResult check_conditioned_perturbation(std::size_t instances, std::uint64_t seed);

/// Small-r kernel bounds on a dense grid for each kernel.
SuiteResult check_kernel_bounds(const std::vector<KernelSpec>& kernels, std::size_t grid_points = 400);

/// Analytic block_mll gradient vs central differences (step 1e-5 in log space),
/// error |g - fd| / max(|fd|, 1) < 1e-4.
SuiteResult check_mll_gradients(std::size_t instances, std::uint64_t seed);

/// GPnn/NNGP predictors vs an explicit-inverse oracle, error
/// |a - o| / max(|o|, 1) < 1e-10.
SuiteResult check_predictor_oracle(std::size_t instances, std::uint64_t seed);

/// Mean unchanged and variance scaled by alpha under (sf2, sx2) -> alpha (sf2, sx2), to 1e-12.
SuiteResult check_calibration_invariance(std::size_t instances, std::uint64_t seed);

/// Rate experiment, hyperparameter fit and batch prediction re-run with 1 and
/// `threads` workers must agree bit for bit.
SuiteResult check_thread_determinism(std::uint64_t seed, std::size_t threads = 8);

std::vector<SuiteResult> run_selfcheck(std::uint64_t seed);

nlohmann::json to_json(const SuiteResult& r);

}  // namespace gpnn
