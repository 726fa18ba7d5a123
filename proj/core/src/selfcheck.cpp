#include "gpnn/selfcheck.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "gpnn/calibration.hpp"
#include "gpnn/dataset.hpp"
#include "gpnn/hyperfit.hpp"
#include "gpnn/local_gp.hpp"
#include "gpnn/neighbors.hpp"
#include "gpnn/rng.hpp"
#include "gpnn/simulation.hpp"

namespace gpnn {
namespace {

double log_uniform(RandomStream& rng, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

std::size_t uniform_int(RandomStream& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

KernelSpec random_kernel(RandomStream& rng) {
  switch (uniform_int(rng, 0, 5)) {
    case 0:
      return KernelSpec::exponential();
    case 1:
      return KernelSpec::squared_exponential();
    case 2:
      return KernelSpec::matern(1.5);
    case 3:
      return KernelSpec::matern(2.5);
    case 4:
      return KernelSpec::matern(0.75);
    default:
      return KernelSpec::matern(1.0);
  }
}

PointMatrix random_points(RandomStream& rng, std::size_t n, std::size_t d, const Eigen::VectorXd& centre,
                          double scale) {
  std::normal_distribution<double> normal;
  PointMatrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = centre(j) + scale * normal(rng);
  return p;
}

HyperParams random_theta(RandomStream& rng, double min_noise) {
  HyperParams t;
  t.noise_var = log_uniform(rng, min_noise, 1.0);
  t.kernel_scale = log_uniform(rng, 0.3, 3.0);
  t.lengthscale = log_uniform(rng, 0.3, 3.0);
  return t;
}

double mixed_err(double a, double oracle) { return std::abs(a - oracle) / std::max(std::abs(oracle), 1.0); }

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

namespace {

struct LocalInstance {
  std::size_t m = 0;
  HyperParams theta;
  NeighborGeometry geom;
  LocalSystem sys;
};

LocalInstance random_local_instance(std::uint64_t seed, std::size_t k) {
  RandomStream rng(seed, StreamTag::kGeneric, {1, k});
  const std::size_t d = uniform_int(rng, 1, 3);
  const std::size_t m = uniform_int(rng, 1, 40);
  const KernelSpec kernel = random_kernel(rng);
  const HyperParams theta = random_theta(rng, 1e-2);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  for (auto& v : x) v = normal(rng);
  const double scale = log_uniform(rng, 1e-4, 1.0) * theta.lengthscale;
  const PointMatrix pool = random_points(rng, m + uniform_int(rng, 0, 20), d, x, scale);
  const KnnIndex index(pool);
  const NeighborSet ns = index.knn(x, m);
  return {m, theta, neighbor_geometry(ns, pool, kernel, theta), assemble_local_system(x, ns, pool, kernel, theta)};
}

double mat_norm1(const Eigen::MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

// The four perturbation quantities compared against their limits.
struct Deviations {
  double kk = 0.0;   // ||K^{-1}k - sf2 Kinf^{-1} 1||_1 / ||.||_1
  double ktk = 0.0;  // same for the row vector k^T K^{-1} (row 1-norm = max abs entry)
  double ktk2 = 0.0; // row vector k^T K^{-2}
};

Deviations deviations(const LocalInstance& li) {
  const auto m = static_cast<Eigen::Index>(li.m);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  const Eigen::MatrixXd kinf_inv = limit_inverse(li.m, li.theta);
  const double sf2 = li.theta.kernel_scale;
  const Eigen::VectorXd w = li.sys.chol.solve(li.sys.cross);
  const Eigen::VectorXd w2 = li.sys.chol.solve(w);
  const Eigen::VectorXd ref = sf2 * kinf_inv * ones;
  const Eigen::VectorXd ref2 = sf2 * kinf_inv * (kinf_inv * ones);
  Deviations dv;
  dv.kk = (w - ref).lpNorm<1>() / ref.lpNorm<1>();
  dv.ktk = (w - ref).lpNorm<Eigen::Infinity>() / ref.lpNorm<Eigen::Infinity>();
  dv.ktk2 = (w2 - ref2).lpNorm<Eigen::Infinity>() / ref2.lpNorm<Eigen::Infinity>();
  return dv;
}

}  // namespace

SuiteResult check_matrix_inequalities(std::size_t instances, std::uint64_t seed) {
  SuiteResult res{"matrix_inequalities", 0, 0, 0.0, 1.0, ""};
  constexpr double kSlack = 1e-12;
  std::size_t fail_rel = 0, fail_var = 0, fail_kk = 0, fail_ktk = 0, fail_ktk2 = 0, fail_kk_m1 = 0;
  for (std::size_t k = 0; k < instances; ++k) {
    const LocalInstance li = random_local_instance(seed, k);
    const NeighborGeometry& g = li.geom;
    ++res.cases;
    bool ok = true;
    if (!(g.eps_E <= 4.0 * g.eps_m + kSlack && g.eps_E2 <= 2.0 * g.eps_E + kSlack)) ok = false, ++fail_rel;

    const PredictiveDistribution pd = predict_gpnn(li.sys, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(li.m)));
    if (!(pd.variance >= li.theta.noise_var && pd.variance <= li.theta.noise_var + li.theta.kernel_scale))
      ok = false, ++fail_var;

    const Deviations dv = deviations(li);
    auto check = [&](double lhs, double eps_a, std::size_t& counter) {
      if (!(eps_a < 1.0)) return;
      const double rhs = (g.eps_m + eps_a) / (1.0 - eps_a);
      if (rhs > 0.0) res.worst = std::max(res.worst, lhs / rhs);
      if (!(lhs <= rhs + kSlack)) {
        ok = false;
        ++counter;
        if (li.m == 1) ++fail_kk_m1;
      }
    };
    check(dv.kk, g.eps_E, fail_kk);
    check(dv.ktk, g.eps_E, fail_ktk);
    check(dv.ktk2, g.eps_E2, fail_ktk2);
    if (!ok) ++res.failures;
  }
  res.detail = "violations: eps relations " + std::to_string(fail_rel) + ", variance bracket " +
               std::to_string(fail_var) + ", K^-1 k " + std::to_string(fail_kk) + ", k^T K^-1 " +
               std::to_string(fail_ktk) + ", k^T K^-2 " + std::to_string(fail_ktk2) + " (" +
               std::to_string(fail_kk_m1) + " at m=1)";
  return res;
}

SuiteResult check_conditioned_perturbation(std::size_t instances, std::uint64_t seed) {
  SuiteResult res{"conditioned_perturbation", 0, 0, 0.0, 1.0,
                  "kappa (eps_A + eps_b) / (1 - kappa eps_A) with kappa = cond_1 of the limit matrix"};
  constexpr double kSlack = 1e-12;
  std::size_t skipped = 0;
  for (std::size_t k = 0; k < instances; ++k) {
    const LocalInstance li = random_local_instance(seed, k);
    const auto m = static_cast<Eigen::Index>(li.m);
    const Eigen::MatrixXd kinf = limit_gram(li.m, li.theta);
    const Eigen::MatrixXd kinf_inv = limit_inverse(li.m, li.theta);
    const double sf2 = li.theta.kernel_scale;
    const Eigen::VectorXd b = sf2 * Eigen::VectorXd::Ones(m);
    const Eigen::VectorXd db = li.sys.cross - b;
    const Deviations dv = deviations(li);

    auto bound = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_inv, const Eigen::MatrixXd& da, double eps_b) {
      const double kappa = mat_norm1(a) * mat_norm1(a_inv);
      const double eps_a = mat_norm1(da) / mat_norm1(a);
      if (!(kappa * eps_a < 1.0)) return -1.0;
      return kappa * (eps_a + eps_b) / (1.0 - kappa * eps_a);
    };
    const Eigen::MatrixXd da = li.sys.gram - kinf;
    const double r1 = bound(kinf, kinf_inv, da, db.lpNorm<1>() / b.lpNorm<1>());
    // symmetric matrices: the row-vector (infinity-norm) condition number equals the 1-norm one
    const double rinf = bound(kinf, kinf_inv, da, db.lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>());
    const Eigen::MatrixXd k2 = li.sys.gram * li.sys.gram;
    const double r2 = bound(kinf * kinf, kinf_inv * kinf_inv, k2 - kinf * kinf,
                            db.lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>());
    bool ok = true;
    bool any = false;
    for (auto [lhs, rhs] : {std::pair{dv.kk, r1}, std::pair{dv.ktk, rinf}, std::pair{dv.ktk2, r2}}) {
      if (rhs < 0.0) continue;
      any = true;
      if (rhs > 0.0) res.worst = std::max(res.worst, lhs / rhs);
      if (!(lhs <= rhs + kSlack)) ok = false;
    }
    if (!any) {
      ++skipped;
      continue;
    }
    ++res.cases;
    if (!ok) ++res.failures;
  }
  res.detail += "; " + std::to_string(skipped) + " instances outside kappa eps_A < 1";
  return res;
}

SuiteResult check_kernel_bounds(const std::vector<KernelSpec>& kernels, std::size_t grid_points) {
  SuiteResult res{"kernel_bounds", 0, 0, 0.0, 0.0, ""};
  std::vector<double> grid;
  for (std::size_t i = 0; i < grid_points; ++i)
    grid.push_back(std::pow(10.0, -4.0 + 5.0 * static_cast<double>(i) / static_cast<double>(grid_points - 1)));
  for (const auto& k : kernels) {
    const KernelBoundReport rep = verify_kernel_bounds(k, grid);
    res.cases += rep.points.size();
    res.failures += rep.failures();
    for (const auto& p : rep.points) {
      if (!p.in_domain) continue;
      res.worst = std::max({res.worst, p.value_bound - p.value, p.deriv - p.deriv_bound});
    }
    res.detail += (res.detail.empty() ? "" : ", ") + k.name();
  }
  return res;
}

SuiteResult check_mll_gradients(std::size_t instances, std::uint64_t seed) {
  SuiteResult res{"mll_gradient_fd", 0, 0, 0.0, 1e-4, "central differences, step 1e-5 in log space"};
  constexpr double kStep = 1e-5;
  for (std::size_t k = 0; k < instances; ++k) {
    RandomStream rng(seed, StreamTag::kGeneric, {3, k});
    const std::size_t d = uniform_int(rng, 1, 3);
    const KernelSpec kernel = random_kernel(rng);
    HyperParams theta = random_theta(rng, 1e-2);
    std::vector<DataBlock> blocks(uniform_int(rng, 1, 3));
    std::normal_distribution<double> normal;
    for (auto& b : blocks) {
      const std::size_t nb = uniform_int(rng, 2, 15);
      b.x = random_points(rng, nb, d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)), 1.0);
      b.y.resize(static_cast<Eigen::Index>(nb));
      for (auto& v : b.y) v = normal(rng);
    }
    const Eigen::Vector3d g = block_mll_grad(theta, blocks, kernel);
    for (int p = 0; p < 3; ++p) {
      auto at = [&](double s) {
        HyperParams t = theta;
        double* field = p == 0 ? &t.noise_var : p == 1 ? &t.kernel_scale : &t.lengthscale;
        *field *= std::exp(s);
        return block_mll(t, blocks, kernel);
      };
      const double fd = (at(kStep) - at(-kStep)) / (2.0 * kStep);
      const double err = mixed_err(g(p), fd);
      res.worst = std::max(res.worst, err);
      ++res.cases;
      if (!(err < res.tolerance)) ++res.failures;
    }
  }
  return res;
}

SuiteResult check_predictor_oracle(std::size_t instances, std::uint64_t seed) {
  SuiteResult res{"predictor_oracle", 0, 0, 0.0, 1e-10, "explicit inverse via full-pivot LU"};
  for (std::size_t k = 0; k < instances; ++k) {
    RandomStream rng(seed, StreamTag::kGeneric, {4, k});
    const std::size_t d = uniform_int(rng, 1, 3);
    const std::size_t m = uniform_int(rng, 1, 30);
    const KernelSpec kernel = random_kernel(rng);
    HyperParams theta = random_theta(rng, 5e-2);
    std::normal_distribution<double> normal;
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    const PointMatrix nb = random_points(rng, m, d, x, log_uniform(rng, 0.1, 2.0));
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    for (auto& v : y) v = normal(rng);
    const bool nngp = k % 2 == 1;
    const std::size_t dt = nngp ? uniform_int(rng, 1, 3) : 0;
    Eigen::MatrixXd tn(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dt));
    Eigen::VectorXd ts(static_cast<Eigen::Index>(dt));
    theta.b.resize(static_cast<Eigen::Index>(dt));
    for (Eigen::Index j = 0; j < tn.size(); ++j) tn.data()[j] = normal(rng);
    for (auto& v : ts) v = normal(rng);
    for (auto& v : theta.b) v = normal(rng);

    const LocalSystem sys = assemble_local_system(x, nb, kernel, theta);
    const PredictiveDistribution pd =
        nngp ? predict_nngp(sys, y, ts, tn, theta) : predict_gpnn(sys, y);

    // oracle: dense inverse of an independently assembled Gram matrix
    Eigen::MatrixXd kk(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd ks(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < kk.rows(); ++i) {
      for (Eigen::Index j = 0; j < kk.cols(); ++j)
        kk(i, j) = theta.kernel_scale * kernel.value((nb.row(i) - nb.row(j)).norm() / theta.lengthscale) +
                   (i == j ? theta.noise_var : 0.0);
      ks(i) = theta.kernel_scale * kernel.value(nb.row(i).norm() / theta.lengthscale);
    }
    const Eigen::MatrixXd inv = kk.fullPivLu().inverse();
    const double gamma = (theta.noise_var + static_cast<double>(m) * theta.kernel_scale) /
                         (static_cast<double>(m) * theta.kernel_scale);
    const Eigen::VectorXd centred = nngp ? Eigen::VectorXd(y - tn * theta.b) : y;
    const double mean = gamma * ks.dot(inv * centred) + (nngp ? ts.dot(theta.b) : 0.0);
    const double var = theta.noise_var + theta.kernel_scale - ks.dot(inv * ks);
    const double err = std::max(mixed_err(pd.mean, mean), mixed_err(pd.variance, var));
    res.worst = std::max(res.worst, err);
    ++res.cases;
    if (!(err < res.tolerance)) ++res.failures;
  }
  return res;
}

SuiteResult check_calibration_invariance(std::size_t instances, std::uint64_t seed) {
  SuiteResult res{"calibration_invariance", 0, 0, 0.0, 1e-12, "relative mean / variance deviation"};
  for (std::size_t k = 0; k < instances; ++k) {
    RandomStream rng(seed, StreamTag::kGeneric, {5, k});
    const std::size_t d = uniform_int(rng, 1, 3);
    const std::size_t m = uniform_int(rng, 1, 30);
    const KernelSpec kernel = random_kernel(rng);
    const HyperParams theta = random_theta(rng, 5e-2);
    const double alpha = log_uniform(rng, 0.1, 10.0);
    std::normal_distribution<double> normal;
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    const PointMatrix nb = random_points(rng, m, d, x, log_uniform(rng, 0.1, 2.0));
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    for (auto& v : y) v = normal(rng);
    const PredictiveDistribution a = predict_gpnn(assemble_local_system(x, nb, kernel, theta), y);
    const PredictiveDistribution b =
        predict_gpnn(assemble_local_system(x, nb, kernel, apply_calibration(theta, alpha)), y);
    const double mean_err = std::abs(a.mean - b.mean) / std::max(std::abs(a.mean), 1.0);
    const double var_err = std::abs(b.variance - alpha * a.variance) / (alpha * a.variance);
    const double err = std::max(mean_err, var_err);
    res.worst = std::max(res.worst, err);
    ++res.cases;
    if (!(err <= res.tolerance)) ++res.failures;
  }
  return res;
}

SuiteResult check_thread_determinism(std::uint64_t seed, std::size_t threads) {
  SuiteResult res{"thread_determinism", 0, 0, 0.0, 0.0, "1 vs " + std::to_string(threads) + " threads"};
  RateExperiment e;
  e.setup.covariates = {CovariateKind::kUniformDisk, 2};
  e.setup.generative = NngpGenerative{};
  e.setup.kernel = KernelSpec::matern(0.5);
  e.setup.n_test = 300;
  e.setup.replicates = 2;
  e.setup.seed = seed;
  e.setup.schedule = {0.5, 1600, 20, 0};
  e.theta.noise_var = 0.1;
  e.theta.lengthscale = std::sqrt(2.0);
  e.theta.b = Eigen::VectorXd::Ones(2);
  e.n_grid = {200, 400, 800, 1600};
  auto curve_values = [&](std::size_t t) {
    RateExperiment c = e;
    c.setup.threads = t;
    const RiskCurve rc = run_rate_experiment(c);
    std::vector<double> v;
    for (const auto& en : rc.entries) v.insert(v.end(), {en.risk, en.std_err});
    v.insert(v.end(), {rc.fit.slope, rc.fit.r_squared});
    return v;
  };
  ++res.cases;
  if (!bitwise_equal(curve_values(1), curve_values(threads))) ++res.failures;

  // hyperparameter fit
  RandomStream rng(seed, StreamTag::kGeneric, {6});
  const PointMatrix x = sample_covariates({CovariateKind::kGaussianIsotropic, 2}, 400, rng);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = regression_fn_tanh(2, x.row(i).transpose());
  const auto blocks = gather_blocks(x, y, block_partition(400, 8, 50, seed));
  FitConfig fc;
  fc.iterations = 20;
  fc.init = initial_hyperparams(blocks);
  auto fit_values = [&](std::size_t t) {
    FitConfig c = fc;
    c.threads = t;
    const FitResult r = fit_hyperparams(blocks, KernelSpec::matern(1.5), c);
    std::vector<double> v = r.trace;
    v.insert(v.end(), {r.theta.noise_var, r.theta.kernel_scale, r.theta.lengthscale});
    return v;
  };
  ++res.cases;
  if (!bitwise_equal(fit_values(1), fit_values(threads))) ++res.failures;

  // batch prediction
  Dataset train;
  train.x = x;
  train.y = y;
  Dataset query;
  query.x = sample_covariates({CovariateKind::kGaussianIsotropic, 2}, 200, rng);
  HyperParams th;
  auto pred_values = [&](std::size_t t) {
    const BatchPrediction p = predict_batch(train, query, KernelSpec::matern(1.5), th, 16, {}, t);
    std::vector<double> v = p.mean;
    v.insert(v.end(), p.variance.begin(), p.variance.end());
    return v;
  };
  ++res.cases;
  if (!bitwise_equal(pred_values(1), pred_values(threads))) ++res.failures;
  return res;
}

std::vector<SuiteResult> run_selfcheck(std::uint64_t seed) {
  const std::vector<KernelSpec> kernels{KernelSpec::exponential(), KernelSpec::squared_exponential(),
                                        KernelSpec::matern(0.5),   KernelSpec::matern(0.75),
                                        KernelSpec::matern(1.0),   KernelSpec::matern(1.5),
                                        KernelSpec::matern(2.5)};
  return {check_matrix_inequalities(500, seed), check_conditioned_perturbation(500, seed),
          check_kernel_bounds(kernels), check_mll_gradients(50, seed),
          check_predictor_oracle(200, seed),    check_calibration_invariance(200, seed),
          check_thread_determinism(seed)};
}

nlohmann::json to_json(const SuiteResult& r) {
  return {{"suite", r.name},        {"cases", r.cases},         {"failures", r.failures}, {"worst", r.worst},
          {"tolerance", r.tolerance}, {"passed", r.passed()}, {"detail", r.detail}};
}

}  // namespace gpnn
