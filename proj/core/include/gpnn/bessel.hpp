#pragma once

#include <utility>

namespace gpnn::special {

/// Modified Bessel function of the second kind K_nu(x) for a fixed order
/// nu >= 0.  Order-dependent Temme coefficients are computed once at
/// construction; evaluation uses Temme's series for x < 2 and Steed's
/// continued fraction (CF2) otherwise, followed by upward recurrence from the
/// reduced order mu = nu - round(nu).
class BesselK {
 public:
  explicit BesselK(double nu);

  double order() const noexcept { return nu_; }

  /// e^x K_nu(x), x > 0.
  double scaled(double x) const noexcept { return scaled_pair(x).first; }

  /// (e^x K_nu(x), e^x K_{nu+1}(x)), x > 0.
  std::pair<double, double> scaled_pair(double x) const noexcept;

  /// K_nu(x), x > 0.  Underflows to 0 for large x.
  double operator()(double x) const noexcept;

 private:
  double nu_;
  int steps_;  // number of upward recurrence steps from mu to nu
  double mu_;
  double gam1_, gam2_, gampl_, gammi_;
};

/// K_nu(x) for nu real (K_{-nu} = K_nu), x > 0.
double bessel_k(double nu, double x);

/// Modified Bessel function of the first kind I_nu(x), nu >= 0, x >= 0, by
/// its power series.  Intended for moderate arguments (x <~ 30).
double bessel_i(double nu, double x);

}  // namespace gpnn::special
