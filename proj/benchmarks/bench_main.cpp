#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>

#include "gpnn/local_gp.hpp"
#include "gpnn/neighbors.hpp"
#include "gpnn/synth.hpp"

using namespace gpnn;

namespace {

PointMatrix points(std::size_t n, std::size_t d, std::uint64_t seed) {
  return sample_covariates({CovariateKind::kUniformHypercube, d}, n, seed);
}

// baseline: full scan with partial sort
std::vector<std::size_t> scan_knn(const PointMatrix& x, const Eigen::VectorXd& q, std::size_t m) {
  std::vector<double> d2(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) d2[static_cast<std::size_t>(i)] = (x.row(i).transpose() - q).squaredNorm();
  std::vector<std::size_t> idx(d2.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(),
                    [&](std::size_t a, std::size_t b) { return d2[a] < d2[b] || (d2[a] == d2[b] && a < b); });
  idx.resize(m);
  return idx;
}

void BM_KnnIndex(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const KnnIndex index(points(n, d, 1));
  const PointMatrix q = points(256, d, 2);
  Eigen::Index i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.knn(q.row(i).transpose(), 50));
    i = (i + 1) % q.rows();
  }
}
BENCHMARK(BM_KnnIndex)->ArgsProduct({{10000, 100000}, {2, 4, 8, 24}});

void BM_KnnScan(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const PointMatrix x = points(n, d, 1);
  const PointMatrix q = points(256, d, 2);
  Eigen::Index i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan_knn(x, q.row(i).transpose(), 50));
    i = (i + 1) % q.rows();
  }
}
BENCHMARK(BM_KnnScan)->ArgsProduct({{10000, 100000}, {2, 4, 8, 24}});

void BM_BuildIndex(benchmark::State& state) {
  const PointMatrix x = points(static_cast<std::size_t>(state.range(0)), 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(KnnIndex(x));
}
BENCHMARK(BM_BuildIndex)->Arg(10000)->Arg(100000);

void BM_LocalPredict(benchmark::State& state, KernelSpec kernel) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const PointMatrix nb = points(m, 2, 3);
  const Eigen::VectorXd x_star = Eigen::VectorXd::Constant(2, 0.5);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(m), -1.0, 1.0);
  HyperParams theta;
  theta.noise_var = 0.1;
  theta.kernel_scale = 1.0;
  theta.lengthscale = 0.3;
  for (auto _ : state) {
    const LocalSystem sys = assemble_local_system(x_star, nb, kernel, theta);
    benchmark::DoNotOptimize(predict_gpnn(sys, y));
  }
}
BENCHMARK_CAPTURE(BM_LocalPredict, matern32, KernelSpec::matern(1.5))->Arg(10)->Arg(50)->Arg(200);
BENCHMARK_CAPTURE(BM_LocalPredict, matern1, KernelSpec::matern(1.0))->Arg(10)->Arg(50)->Arg(200);

void BM_KernelValue(benchmark::State& state, KernelSpec kernel) {
  double r = 1e-3, acc = 0.0;
  for (auto _ : state) {
    acc += kernel.value(r);
    r = r < 5.0 ? r * 1.01 : 1e-3;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK_CAPTURE(BM_KernelValue, exp, KernelSpec::exponential());
BENCHMARK_CAPTURE(BM_KernelValue, sq_exp, KernelSpec::squared_exponential());
BENCHMARK_CAPTURE(BM_KernelValue, matern_half, KernelSpec::matern(0.5));
BENCHMARK_CAPTURE(BM_KernelValue, matern_1, KernelSpec::matern(1.0));
BENCHMARK_CAPTURE(BM_KernelValue, matern_0_75, KernelSpec::matern(0.75));

}  // namespace
BENCHMARK_MAIN();
