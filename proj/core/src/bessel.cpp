#include "gpnn/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gpnn/errors.hpp"

namespace gpnn::special {
namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;
constexpr double kSeriesCutoff = 2.0;

// Taylor coefficients of 1/Gamma(z) = sum_{k>=1} c_k z^k.
constexpr double kRecipGamma[] = {
    1.0,
    0.5772156649015328606,
    -0.6558780715202538811,
    -0.0420026350340952355,
    0.1665386113822914895,
    -0.0421977345555443367,
    -0.0096219715278769736,
    0.0072189432466630995,
    -0.0011651675918590651,
    -0.0002152416741149510,
    0.0001280502823881162,
    -0.0000201348547807882,
    -0.0000012504934821427,
    0.0000011330272319817,
    -0.0000002056338416978,
    0.0000000061160951045,
    0.0000000050020076445,
    -0.0000000011812745705,
    0.0000000001043426712,
    0.0000000000077822634,
    -0.0000000000036968056,
    0.0000000000005100370,
};

// gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
// for |mu| <= 1/2, from the even/odd parts of the 1/Gamma series.
void temme_gammas(double mu, double& gam1, double& gam2) {
  const double mu2 = mu * mu;
  constexpr int n = static_cast<int>(std::size(kRecipGamma));
  double odd = 0.0;   // sum over c_{2j}   mu^{2j-2}
  double even = 0.0;  // sum over c_{2j+1} mu^{2j}
  for (int k = n; k >= 1; --k) {
    if (k % 2 == 0)
      odd = odd * mu2 + kRecipGamma[k - 1];
    else
      even = even * mu2 + kRecipGamma[k - 1];
  }
  gam1 = -odd;
  gam2 = even;
}

}  // namespace

BesselK::BesselK(double nu) : nu_(nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw InputError("BesselK: order must be finite and >= 0");
  steps_ = static_cast<int>(nu + 0.5);
  mu_ = nu - steps_;
  temme_gammas(mu_, gam1_, gam2_);
  gampl_ = gam2_ - mu_ * gam1_;  // 1/Gamma(1+mu)
  gammi_ = gam2_ + mu_ * gam1_;  // 1/Gamma(1-mu)
}

std::pair<double, double> BesselK::scaled_pair(double x) const noexcept {
  const double mu = mu_;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  double rkmu = 0.0;
  double rk1 = 0.0;

  if (x < kSeriesCutoff) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double ff = fact * (gam1_ * std::cosh(e) + gam2_ * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl_;
    double q = 0.5 / (e * gammi_);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIter; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
      c *= d / i;
      p /= (i - mu);
      q /= (i + mu);
      const double del = c * ff;
      sum += del;
      const double del1 = c * (p - i * ff);
      sum1 += del1;
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    const double scale = std::exp(x);
    rkmu = sum * scale;
    rk1 = sum1 * xi2 * scale;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= kMaxIter; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
    }
    h = a1 * h;
    rkmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    rk1 = rkmu * (mu + x + 0.5 - h) * xi;
  }

  for (int i = 1; i <= steps_; ++i) {
    const double next = (mu + i) * xi2 * rk1 + rkmu;
    rkmu = rk1;
    rk1 = next;
  }
  return {rkmu, rk1};
}

double BesselK::operator()(double x) const noexcept {
  if (x > 745.0) return 0.0;
  return scaled(x) * std::exp(-x);
}

double bessel_k(double nu, double x) {
  if (!(x > 0.0)) throw InputError("bessel_k: argument must be positive");
  return BesselK(std::abs(nu))(x);
}

double bessel_i(double nu, double x) {
  if (!(nu >= 0.0) || !(x >= 0.0)) throw InputError("bessel_i: requires nu >= 0 and x >= 0");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const double half = 0.5 * x;
  const double q = half * half;
  double term = std::exp(nu * std::log(half) - std::lgamma(nu + 1.0));
  double sum = term;
  for (int k = 1; k < kMaxIter; ++k) {
    term *= q / (k * (k + nu));
    sum += term;
    if (term < sum * kEps) break;
  }
  return sum;
}

}  // namespace gpnn::special
