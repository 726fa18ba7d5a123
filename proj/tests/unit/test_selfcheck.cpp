#include <gtest/gtest.h>

#include "gpnn/selfcheck.hpp"

using namespace gpnn;

TEST(Selfcheck, KernelBoundsGridPasses) {
  const auto r = check_kernel_bounds({KernelSpec::exponential(), KernelSpec::squared_exponential(),
                                      KernelSpec::matern(0.5), KernelSpec::matern(0.75), KernelSpec::matern(1.5),
                                      KernelSpec::matern(2.5)});
  EXPECT_TRUE(r.passed()) << r.failures;
}

TEST(Selfcheck, GradientPredictorCalibrationAndThreads) {
  EXPECT_TRUE(check_mll_gradients(10, 3).passed());
  EXPECT_TRUE(check_predictor_oracle(40, 3).passed());
  EXPECT_TRUE(check_calibration_invariance(40, 3).passed());
  EXPECT_TRUE(check_thread_determinism(3, 4).passed());
}

TEST(Selfcheck, PerturbationBounds) {
  // the condition-number-aware bound always holds; the 1-norm relations between
  // the epsilons and the variance bracket never fail
  const auto cond = check_conditioned_perturbation(200, 5);
  EXPECT_TRUE(cond.passed()) << cond.detail;
  const auto stated = check_matrix_inequalities(200, 5);
  EXPECT_NE(stated.detail.find("eps relations 0, variance bracket 0"), std::string::npos) << stated.detail;
  EXPECT_NE(stated.detail.find("(0 at m=1)"), std::string::npos) << stated.detail;
}
