#include "gpnn/synth.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <random>

#include "gpnn/errors.hpp"

namespace gpnn {

void CovariateSpec::validate() const {
  if (dim == 0) throw InputError("covariates: dim must be positive");
  if (kind == CovariateKind::kUniformDisk && dim != 2) throw InputError("covariates: uniform disk requires dim = 2");
}

PointMatrix sample_covariates(const CovariateSpec& spec, std::size_t n, RandomStream& rng) {
  spec.validate();
  if (n == 0) throw InputError("sample_covariates: n must be positive");
  const auto d = static_cast<Eigen::Index>(spec.dim);
  PointMatrix x(static_cast<Eigen::Index>(n), d);
  std::normal_distribution<double> normal;
  switch (spec.kind) {
    case CovariateKind::kGaussianIsotropic: {
      const double sd = 1.0 / std::sqrt(static_cast<double>(spec.dim));
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = sd * normal(rng);
      break;
    }
    case CovariateKind::kUniformDisk:
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double r = std::sqrt(rng.uniform());
        const double a = 2.0 * std::numbers::pi * rng.uniform();
        x(i, 0) = r * std::cos(a);
        x(i, 1) = r * std::sin(a);
      }
      break;
    case CovariateKind::kUniformHypercube:
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform();
      break;
  }
  return x;
}

PointMatrix sample_covariates(const CovariateSpec& spec, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed, StreamTag::kTrainCovariates, {});
  return sample_covariates(spec, n, rng);
}

double regression_fn_tanh(std::size_t d, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (d == 0 || d % 2 != 0) throw InputError("regression_fn_tanh: d must be even and positive");
  if (static_cast<std::size_t>(x.size()) != d) throw InputError("regression_fn_tanh: dimension mismatch");
  const double sd = std::sqrt(static_cast<double>(d));
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) s1 += std::sin(sd * x(static_cast<Eigen::Index>(j)));
  for (std::size_t j = 0; j < d / 2; ++j)
    s2 += std::cos(sd * (x(static_cast<Eigen::Index>(2 * j)) + x(static_cast<Eigen::Index>(2 * j + 1))));
  return std::tanh(s1 / sd + s2 / std::sqrt(0.5 * static_cast<double>(d)));
}

double GpnnGenerative::f(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (function == "tanh") return regression_fn_tanh(static_cast<std::size_t>(x.size()), x);
  if (function == "zero") return 0.0;
  throw InputError("gpnn generative: unknown regression function '" + function + "'");
}

double GpnnGenerative::noise(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return noise_fn ? noise_fn(x) : noise_var;
}

void GpnnGenerative::validate(std::size_t dim) const {
  if (function != "tanh" && function != "zero") throw InputError("gpnn generative: unknown regression function '" + function + "'");
  if (function == "tanh" && dim % 2 != 0) throw InputError("gpnn generative: tanh test function needs even dim");
  if (!(noise_var >= 0.0)) throw InputError("gpnn generative: noise_var must be nonnegative");
}

Eigen::VectorXd NngpGenerative::regressors_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (regressors == "squares") return x.array().square().matrix();
  if (regressors == "linear") return x;
  if (regressors == "constant") return Eigen::VectorXd::Ones(1);
  throw InputError("nngp generative: unknown regressors '" + regressors + "'");
}

std::size_t NngpGenerative::regressor_dim(std::size_t dim) const { return regressors == "constant" ? 1 : dim; }

void NngpGenerative::validate(std::size_t dim) const {
  if (regressors != "squares" && regressors != "linear" && regressors != "constant")
    throw InputError("nngp generative: unknown regressors '" + regressors + "'");
  if (static_cast<std::size_t>(b.size()) != regressor_dim(dim))
    throw InputError("nngp generative: |b| does not match the regressor dimension");
  if (!(lengthscale > 0.0)) throw InputError("nngp generative: lengthscale must be positive");
  if (!(latent_var >= 0.0)) throw InputError("nngp generative: latent_var must be nonnegative");
  if (!(noise_var >= 0.0)) throw InputError("nngp generative: noise_var must be nonnegative");
}

LocalSample gpnn_local_responses(const Eigen::Ref<const Eigen::VectorXd>& x_star, std::size_t test_index,
                                 const PointMatrix& nb, std::span<const std::size_t> ids, const GpnnGenerative& gen,
                                 const SampleKey& key) {
  if (static_cast<std::size_t>(nb.rows()) != ids.size()) throw InputError("gpnn_local_responses: ids/points mismatch");
  LocalSample s;
  s.y.resize(nb.rows());
  for (Eigen::Index i = 0; i < nb.rows(); ++i) {
    const Eigen::VectorXd xi = nb.row(i).transpose();
    const double var = gen.noise(xi);
    double y = gen.f(xi);
    if (var > 0.0) {
      RandomStream rng(key.seed, StreamTag::kTrainNoise, {key.n, key.replicate, ids[static_cast<std::size_t>(i)]});
      y += std::sqrt(var) * std::normal_distribution<double>()(rng);
    }
    s.y(i) = y;
  }
  s.truth = gen.f(x_star);
  s.noisy = s.truth;
  const double var = gen.noise(x_star);
  if (var > 0.0) {
    RandomStream rng(key.seed, StreamTag::kTestNoise, {key.n, key.replicate, key.point_set, test_index});
    s.noisy += std::sqrt(var) * std::normal_distribution<double>()(rng);
  }
  return s;
}

LocalSample nngp_local_responses(const Eigen::Ref<const Eigen::VectorXd>& x_star, std::size_t test_index,
                                 const PointMatrix& nb, const NngpGenerative& gen, const SampleKey& key) {
  const Eigen::Index m = nb.rows();
  const Eigen::Index d = nb.cols();
  if (x_star.size() != d) throw InputError("nngp_local_responses: dimension mismatch");

  // distinct locations among {x*} ∪ neighbours; slot[k] maps point k to its location
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(m + 1));
  PointMatrix uniq(m + 1, d);
  Eigen::Index nu = 0;
  auto point = [&](Eigen::Index k) -> Eigen::VectorXd {
    return k == 0 ? Eigen::VectorXd(x_star) : Eigen::VectorXd(nb.row(k - 1).transpose());
  };
  for (Eigen::Index k = 0; k <= m; ++k) {
    const Eigen::VectorXd p = point(k);
    Eigen::Index found = -1;
    for (Eigen::Index u = 0; u < nu && found < 0; ++u)
      if ((uniq.row(u).transpose().array() == p.array()).all()) found = u;
    if (found < 0) {
      uniq.row(nu) = p.transpose();
      found = nu++;
    }
    slot[static_cast<std::size_t>(k)] = found;
  }

  RandomStream rng(key.seed, StreamTag::kLocalLatent, {key.n, key.replicate, key.point_set, test_index});
  std::normal_distribution<double> normal;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nu);
  if (gen.latent_var > 0.0) {
    Eigen::MatrixXd c(nu, nu);
    for (Eigen::Index i = 0; i < nu; ++i) {
      c(i, i) = 1.0 + 1e-10;
      for (Eigen::Index j = i + 1; j < nu; ++j)
        c(i, j) = c(j, i) = gen.latent_kernel.value((uniq.row(i) - uniq.row(j)).norm() / gen.lengthscale);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw NumericError("nngp_local_responses: latent covariance not PD after jitter");
    Eigen::VectorXd z(nu);
    for (Eigen::Index i = 0; i < nu; ++i) z(i) = normal(rng);
    const Eigen::VectorXd lz = llt.matrixL() * z;
    w = std::sqrt(gen.latent_var) * lz;
  }

  const double sd = std::sqrt(gen.noise_var);
  LocalSample s;
  s.t_star = gen.regressors_at(x_star);
  s.t_nb.resize(m, s.t_star.size());
  s.y.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd ti = gen.regressors_at(nb.row(i).transpose());
    s.t_nb.row(i) = ti.transpose();
    s.y(i) = ti.dot(gen.b) + w(slot[static_cast<std::size_t>(i + 1)]) + sd * normal(rng);
  }
  s.truth = s.t_star.dot(gen.b) + w(slot[0]);
  s.noisy = s.truth + sd * normal(rng);
  return s;
}

double ScheduleSpec::constant(std::size_t d) const {
  return static_cast<double>(m_at_n_max) / std::pow(static_cast<double>(n_max), exponent(d));
}

void ScheduleSpec::validate() const {
  if (fixed_m > 0) return;
  if (!(p > 0.0) || !std::isfinite(p)) throw InputError("schedule: p must be positive");
  if (n_max == 0 || m_at_n_max == 0) throw InputError("schedule: pin (n_max, m) must be positive");
}

std::size_t neighbourhood_schedule(const ScheduleSpec& sched, std::size_t d, std::size_t n) {
  sched.validate();
  if (n == 0) throw InputError("neighbourhood_schedule: n must be positive");
  if (sched.fixed_m > 0) return std::min(n, sched.fixed_m);
  if (n == sched.n_max) return std::min(n, sched.m_at_n_max);
  const double v = static_cast<double>(sched.m_at_n_max) *
                   std::pow(static_cast<double>(n) / static_cast<double>(sched.n_max), sched.exponent(d));
  // guard against ceil(100.0000000001) at grid points that hit integers exactly
  const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(v - 1e-9)));
  return std::min(n, m);
}

}  // namespace gpnn
