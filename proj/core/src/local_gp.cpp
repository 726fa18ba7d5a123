#include "gpnn/local_gp.hpp"

#include <algorithm>

#include "gpnn/errors.hpp"

namespace gpnn {

double gamma_factor(std::size_t m, const HyperParams& theta) {
  if (m == 0) throw InputError("gamma_factor: m must be positive");
  const double md = static_cast<double>(m);
  return (theta.noise_var + md * theta.kernel_scale) / (md * theta.kernel_scale);
}

LocalSystem assemble_local_system(const Eigen::Ref<const Eigen::VectorXd>& x_star, const PointMatrix& nb,
                                  const KernelSpec& kernel, const HyperParams& theta) {
  theta.validate();
  const Eigen::Index m = nb.rows();
  if (m == 0) throw InputError("assemble_local_system: empty neighbourhood");
  if (nb.cols() != x_star.size()) throw InputError("assemble_local_system: dimension mismatch");
  const double sf2 = theta.kernel_scale, sx2 = theta.noise_var, ell = theta.lengthscale;

  LocalSystem sys;
  sys.noise_var = sx2;
  sys.kernel_scale = sf2;
  sys.gamma = gamma_factor(static_cast<std::size_t>(m), theta);
  sys.gram.resize(m, m);
  sys.cross.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    sys.gram(i, i) = sf2 + sx2;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double r = (nb.row(i) - nb.row(j)).norm() / ell;
      sys.gram(i, j) = sys.gram(j, i) = sf2 * kernel.value(r);
    }
    sys.cross(i) = sf2 * kernel.value((nb.row(i).transpose() - x_star).norm() / ell);
  }

  if (sx2 < kJitterThreshold) sys.jitter = kJitterScale * sf2;
  if (sys.jitter > 0.0) {
    Eigen::MatrixXd k = sys.gram;
    k.diagonal().array() += sys.jitter;
    sys.chol.compute(k);
  } else {
    sys.chol.compute(sys.gram);
  }
  if (sys.chol.info() != Eigen::Success) throw NumericError("assemble_local_system: Cholesky factorisation failed");
  return sys;
}

LocalSystem assemble_local_system(const Eigen::Ref<const Eigen::VectorXd>& x_star, const NeighborSet& ns,
                                  const PointMatrix& points, const KernelSpec& kernel, const HyperParams& theta) {
  return assemble_local_system(x_star, gather_rows(points, ns.indices), kernel, theta);
}

namespace {

PredictiveDistribution predict_centered(const LocalSystem& sys, const Eigen::VectorXd& centred,
                                        const PredictOptions& opts) {
  const auto L = sys.chol.matrixL();
  const Eigen::VectorXd v = L.solve(sys.cross);
  const Eigen::VectorXd w = L.solve(centred);
  PredictiveDistribution out;
  out.gamma = opts.gamma_correction ? sys.gamma : 1.0;
  out.jitter = sys.jitter;
  out.mean = out.gamma * v.dot(w);
  // clamp roundoff into the bracket [sigma_xi^2, sigma_xi^2 + sigma_f^2]
  const double floor = opts.include_noise ? sys.noise_var : 0.0;
  out.variance = std::clamp(floor + sys.kernel_scale - v.squaredNorm(), floor, floor + sys.kernel_scale);
  return out;
}

}  // namespace

PredictiveDistribution predict_gpnn(const LocalSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& responses,
                                    const PredictOptions& opts) {
  if (static_cast<std::size_t>(responses.size()) != sys.size())
    throw InputError("predict_gpnn: responses do not match the neighbourhood size");
  return predict_centered(sys, responses, opts);
}

PredictiveDistribution predict_nngp(const LocalSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& responses,
                                    const Eigen::Ref<const Eigen::VectorXd>& t_star,
                                    const Eigen::Ref<const Eigen::MatrixXd>& t_nb, const HyperParams& theta,
                                    const PredictOptions& opts) {
  const auto m = static_cast<Eigen::Index>(sys.size());
  if (responses.size() != m) throw InputError("predict_nngp: responses do not match the neighbourhood size");
  if (t_star.size() != theta.b.size()) throw InputError("predict_nngp: t* length differs from |b|");
  if (t_nb.rows() != m || t_nb.cols() != theta.b.size())
    throw InputError("predict_nngp: regressor matrix must be m x |b|");
  const Eigen::VectorXd centred = responses - t_nb * theta.b;
  PredictiveDistribution out = predict_centered(sys, centred, opts);
  out.mean += t_star.dot(theta.b);
  return out;
}

Eigen::MatrixXd limit_gram(std::size_t m, const HyperParams& theta) {
  if (m == 0) throw InputError("limit_gram: m must be positive");
  const auto mi = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd k = Eigen::MatrixXd::Constant(mi, mi, theta.kernel_scale);
  k.diagonal().array() += theta.noise_var;
  return k;
}

Eigen::MatrixXd limit_inverse(std::size_t m, const HyperParams& theta) {
  if (m == 0) throw InputError("limit_inverse: m must be positive");
  if (!(theta.noise_var > 0.0)) throw InputError("limit_inverse: requires noise_var > 0");
  const auto mi = static_cast<Eigen::Index>(m);
  const double sx2 = theta.noise_var, sf2 = theta.kernel_scale;
  const double c = sf2 / (sx2 + static_cast<double>(m) * sf2);
  Eigen::MatrixXd inv = Eigen::MatrixXd::Constant(mi, mi, -c);
  inv.diagonal().array() += 1.0;
  return inv / sx2;
}

}  // namespace gpnn
