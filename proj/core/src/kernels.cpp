#include "gpnn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>

#include "gpnn/bessel.hpp"
#include "gpnn/errors.hpp"

namespace gpnn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// nu = 1 only admits exponents 2 - eps.
constexpr double kNuOneEps = 0.1;

bool near(double a, double b) { return std::abs(a - b) < 1e-14; }

// Maximum of f over [lo, hi]: dense log-spaced scan, then golden-section
// refinement around the best sample.
double numeric_sup(const std::function<double(double)>& f, double lo, double hi) {
  constexpr int kSamples = 4000;
  const double llo = std::log(lo), lhi = std::log(hi);
  int best = 0;
  double best_val = -kInf;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = std::exp(llo + (lhi - llo) * i / kSamples);
    const double v = f(r);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = llo + (lhi - llo) * std::max(best - 1, 0) / kSamples;
  double b = llo + (lhi - llo) * std::min(best + 1, kSamples) / kSamples;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(std::exp(c)) > f(std::exp(d)))
      b = d;
    else
      a = c;
  }
  return std::max(best_val, f(std::exp(0.5 * (a + b))));
}

}  // namespace

KernelSpec KernelSpec::exponential() {
  KernelSpec k;
  k.family_ = KernelFamily::kExponential;
  k.nu_ = 0.5;
  k.closed_form_ = 1;
  k.init_bounds();
  return k;
}

KernelSpec KernelSpec::squared_exponential() {
  KernelSpec k;
  k.family_ = KernelFamily::kSquaredExponential;
  k.nu_ = kInf;
  k.init_bounds();
  return k;
}

KernelSpec KernelSpec::matern(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InputError("matern: nu must be positive and finite");
  if (nu > 50.0) throw InputError("matern: nu > 50 not supported (use sq_exp)");
  KernelSpec k;
  k.family_ = KernelFamily::kMatern;
  k.nu_ = nu;
  if (near(nu, 0.5))
    k.closed_form_ = 1;
  else if (near(nu, 1.5))
    k.closed_form_ = 3;
  else if (near(nu, 2.5))
    k.closed_form_ = 5;
  k.log_norm_ = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu);
  k.sqrt_2nu_ = std::sqrt(2.0 * nu);
  k.k_nu_ = std::make_shared<special::BesselK>(nu);
  k.k_nu_minus_1_ = std::make_shared<special::BesselK>(std::abs(nu - 1.0));
  k.init_bounds();
  return k;
}

std::string KernelSpec::name() const {
  switch (family_) {
    case KernelFamily::kExponential:
      return "exp";
    case KernelFamily::kSquaredExponential:
      return "sq_exp";
    case KernelFamily::kMatern:
      break;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "matern(nu=%.17g)", nu_);
  return buf;
}

double matern_bessel_value(const KernelSpec& spec, double r) {
  if (spec.family_ != KernelFamily::kMatern) throw InputError("matern_bessel_value: not a Matern kernel");
  const double x = spec.sqrt_2nu_ * r;
  if (x == 0.0) return 1.0;
  if (x < 1e-150) return 1.0;
  return std::exp(spec.log_norm_ + spec.nu_ * std::log(x) - x) * spec.k_nu_->scaled(x);
}

double KernelSpec::value(double r) const noexcept {
  switch (family_) {
    case KernelFamily::kExponential:
      return std::exp(-r);
    case KernelFamily::kSquaredExponential:
      return std::exp(-0.5 * r * r);
    case KernelFamily::kMatern:
      break;
  }
  switch (closed_form_) {
    case 1:
      return std::exp(-r);
    case 3: {
      const double s = std::numbers::sqrt3 * r;
      return (1.0 + s) * std::exp(-s);
    }
    case 5: {
      const double s = std::sqrt(5.0) * r;
      return (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    default:
      return matern_bessel_value(*this, r);
  }
}

double KernelSpec::derivative(double r) const noexcept {
  switch (family_) {
    case KernelFamily::kExponential:
      return -std::exp(-r);
    case KernelFamily::kSquaredExponential:
      return -r * std::exp(-0.5 * r * r);
    case KernelFamily::kMatern:
      break;
  }
  switch (closed_form_) {
    case 1:
      return -std::exp(-r);
    case 3:
      return -3.0 * r * std::exp(-std::numbers::sqrt3 * r);
    case 5: {
      const double s = std::sqrt(5.0) * r;
      return -(5.0 / 3.0) * r * (1.0 + s) * std::exp(-s);
    }
    default:
      break;
  }
  // c'(r) = -(2^{1-nu}/Gamma(nu)) sqrt(2 nu) x^nu K_{nu-1}(x), x = sqrt(2 nu) r
  const double x = sqrt_2nu_ * r;
  return -sqrt_2nu_ * std::exp(log_norm_ + nu_ * std::log(x) - x) * k_nu_minus_1_->scaled(x);
}

void KernelSpec::init_bounds() {
  BoundConstants& b = bounds_;
  b.value_rmax = kInf;
  b.deriv_rmax = kInf;
  switch (family_) {
    case KernelFamily::kExponential:
      holder_p_ = deriv_p_ = 0.5;
      b.value_exponent = b.deriv_exponent = 1.0;
      b.value_coeff = b.deriv_coeff = 1.0;
      break;
    case KernelFamily::kSquaredExponential:
      holder_p_ = deriv_p_ = 1.0;
      b.value_exponent = b.deriv_exponent = 2.0;
      b.value_coeff = 0.5;
      b.deriv_coeff = 1.0;
      break;
    case KernelFamily::kMatern: {
      const double nu = nu_;
      holder_p_ = std::min(nu, 1.0);
      if (near(nu, 1.0)) {
        deriv_p_ = 1.0 - 0.5 * kNuOneEps;
        b.value_exponent = b.deriv_exponent = 2.0 - kNuOneEps;
        b.value_rmax = b.deriv_rmax = 1.0;
        // The maximiser sits near r = e^{-1/eps}, where 1 - c cancels badly;
        // there 1 - c = r^2 (log(sqrt2 / r) - gamma + 1/2) + O(r^4 log r).
        auto one_minus_c = [&](double r) {
          if (r < 1e-3) return r * r * (std::log(std::numbers::sqrt2 / r) - std::numbers::egamma + 0.5);
          return 1.0 - value(r);
        };
        b.value_coeff = numeric_sup([&](double r) { return one_minus_c(r) / std::pow(r, 2.0 - kNuOneEps); },
                                    1e-12, 1.0) * (1.0 + 1e-4);
        b.deriv_coeff = numeric_sup([&](double r) { return std::abs(r * derivative(r)) / std::pow(r, 2.0 - kNuOneEps); },
                                    1e-12, 1.0) * (1.0 + 1e-9);
      } else if (nu > 1.0) {
        deriv_p_ = 1.0;
        b.value_exponent = b.deriv_exponent = 2.0;
        b.value_coeff = nu / (2.0 * (nu - 1.0));
        b.deriv_coeff = nu * (nu + 1.0) / (2.0 * (nu - 1.0));
      } else {
        deriv_p_ = nu;
        b.value_exponent = b.deriv_exponent = 2.0 * nu;
        const double i1 = special::bessel_i(nu, 1.0);
        const double g = std::tgamma(1.0 - nu) * std::pow(nu, nu);
        b.value_coeff = g * i1;
        b.deriv_coeff = g * (1.0 / (std::tgamma(nu) * std::pow(2.0, nu)) + nu * i1);
      }
      break;
    }
  }
  deriv_bc_ = std::max(1.0, numeric_sup([&](double u) { return std::abs(u * derivative(u)); }, 1e-8, 200.0));
}

double kernel_value(const KernelSpec& spec, double r) {
  if (!std::isfinite(r) || r < 0.0) throw InputError("kernel_value: r must be finite and >= 0");
  return spec.value(r);
}

double kernel_metric_sq(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& xp, double lengthscale) {
  if (x.size() != xp.size()) throw InputError("kernel_metric_sq: dimension mismatch");
  if (!(lengthscale > 0.0)) throw InputError("kernel_metric_sq: lengthscale must be positive");
  const double r = (x - xp).norm() / lengthscale;
  return 1.0 - kernel_value(spec, r);
}

double kernel_radial_derivative(const KernelSpec& spec, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InputError("kernel_radial_derivative: r must be positive and finite");
  return spec.derivative(r);
}

bool KernelBoundReport::all_pass() const { return failures() == 0; }

std::size_t KernelBoundReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const KernelBoundPoint& p) { return !p.value_ok || !p.deriv_ok; }));
}

KernelBoundReport verify_kernel_bounds(const KernelSpec& spec, const std::vector<double>& grid) {
  if (grid.empty()) throw InputError("verify_kernel_bounds: empty grid");
  constexpr double kSlack = 1e-12;
  const BoundConstants& b = spec.bounds();
  KernelBoundReport rep;
  rep.points.reserve(grid.size());
  for (double r : grid) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InputError("verify_kernel_bounds: grid values must be positive");
    KernelBoundPoint p;
    p.r = r;
    p.value = spec.value(r);
    p.value_bound = 1.0 - b.value_coeff * std::pow(r, b.value_exponent);
    p.deriv = std::abs(r * spec.derivative(r));
    p.deriv_bound = b.deriv_coeff * std::pow(r, b.deriv_exponent);
    p.in_domain = r <= b.value_rmax && r <= b.deriv_rmax;
    p.value_ok = r > b.value_rmax || p.value >= p.value_bound - kSlack;
    p.deriv_ok = r > b.deriv_rmax || p.deriv <= p.deriv_bound + kSlack;
    rep.points.push_back(p);
  }
  return rep;
}

}  // namespace gpnn
