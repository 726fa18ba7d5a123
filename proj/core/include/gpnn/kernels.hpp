#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

namespace gpnn {

enum class KernelFamily { kExponential, kSquaredExponential, kMatern };

/// Constants of the small-r bounds
///   c(r) >= 1 - value_coeff * r^value_exponent,
///   |r c'(r)| <= deriv_coeff * r^deriv_exponent,
/// valid for r <= value_rmax / deriv_rmax (infinity unless the family only
/// admits a local bound, i.e. Matern nu = 1).
struct BoundConstants {
  double value_exponent = 1.0;
  double value_coeff = 1.0;
  double value_rmax = 0.0;
  double deriv_exponent = 1.0;
  double deriv_coeff = 1.0;
  double deriv_rmax = 0.0;
};

namespace special {
class BesselK;
}

/// Isotropic, normalised correlation function c(r) with its smoothness metadata.
/// Immutable once constructed; all evaluation methods are const and reentrant.
class KernelSpec {
 public:
  static KernelSpec exponential();
  static KernelSpec squared_exponential();
  static KernelSpec matern(double nu);

  KernelFamily family() const noexcept { return family_; }
  /// Matern smoothness; 1/2 for Exponential, +inf for SquaredExponential.
  double nu() const noexcept { return nu_; }
  std::string name() const;

  /// Hoelder exponent p with 1 - c(r) = O(r^{2p}); min(nu, 1) for Matern.
  double holder_p() const noexcept { return holder_p_; }
  double holder_lc() const noexcept { return bounds_.value_coeff; }
  double deriv_p() const noexcept { return deriv_p_; }
  double deriv_lc() const noexcept { return bounds_.deriv_coeff; }
  /// max(1, sup_u |u c'(u)|).
  double deriv_bc() const noexcept { return deriv_bc_; }
  const BoundConstants& bounds() const noexcept { return bounds_; }

  /// c(r); no validation (hot path).
  double value(double r) const noexcept;
  /// c'(r) for r > 0; no validation (hot path).
  double derivative(double r) const noexcept;

 private:
  KernelSpec() = default;
  void init_bounds();

  KernelFamily family_ = KernelFamily::kExponential;
  double nu_ = 0.5;
  int closed_form_ = 0;  // 1: nu=1/2, 3: nu=3/2, 5: nu=5/2, 0: Bessel path
  double log_norm_ = 0.0;  // log(2^{1-nu} / Gamma(nu))
  double sqrt_2nu_ = 1.0;
  std::shared_ptr<const special::BesselK> k_nu_;
  std::shared_ptr<const special::BesselK> k_nu_minus_1_;  // K_{|nu-1|}
  double holder_p_ = 0.5;
  double deriv_p_ = 0.5;
  double deriv_bc_ = 1.0;
  BoundConstants bounds_;

  friend double matern_bessel_value(const KernelSpec&, double);
};

/// Evaluates the Matern correlation through the Bessel-K path even when a
/// closed form exists (used to cross-check the specialisations).
double matern_bessel_value(const KernelSpec& spec, double r);

/// c(r) with input validation.
double kernel_value(const KernelSpec& spec, double r);

/// rho_c^2(x, x') = 1 - c(|x - x'| / lengthscale).
double kernel_metric_sq(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& xp, double lengthscale);

/// c'(r), r > 0.
double kernel_radial_derivative(const KernelSpec& spec, double r);

struct KernelBoundPoint {
  double r = 0.0;
  double value = 0.0;
  double value_bound = 0.0;  // lower bound on c(r)
  bool value_ok = true;
  double deriv = 0.0;        // |r c'(r)|
  double deriv_bound = 0.0;  // upper bound on |r c'(r)|
  bool deriv_ok = true;
  bool in_domain = true;     // false when r exceeds the validity radius
};

struct KernelBoundReport {
  std::vector<KernelBoundPoint> points;
  bool all_pass() const;
  std::size_t failures() const;
};

/// Pointwise check of the small-r bounds stored on `spec`.  Grid points outside
/// a bound's validity radius are reported with in_domain = false and pass.
KernelBoundReport verify_kernel_bounds(const KernelSpec& spec, const std::vector<double>& grid);

}  // namespace gpnn
