#pragma once
// Independent reference implementations: dense algebra via full-pivot LU,
// scalar loops, brute-force search and std:: special functions.  Nothing here
// calls into the library's numerical code apart from KernelSpec::value where
// stated.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

#include "gpnn/kernels.hpp"
#include "gpnn/neighbors.hpp"

namespace oracle {

inline double matern(double nu, double r) {
  if (r == 0.0) return 1.0;
  const double x = std::sqrt(2.0 * nu) * r;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

inline std::vector<std::pair<double, std::size_t>> brute_knn(const gpnn::PointMatrix& pts, const Eigen::VectorXd& q,
                                                             std::size_t m) {
  std::vector<std::pair<double, std::size_t>> all;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < pts.cols(); ++j) s += (pts(i, j) - q(j)) * (pts(i, j) - q(j));
    all.emplace_back(s, static_cast<std::size_t>(i));
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(m, all.size()));
  return all;
}

inline Eigen::MatrixXd gram(const gpnn::PointMatrix& x, const gpnn::KernelSpec& k, double sf2, double ell,
                            double sx2) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      g(i, j) = sf2 * k.value(std::sqrt(s) / ell) + (i == j ? sx2 : 0.0);
    }
  return g;
}

inline Eigen::VectorXd cross(const gpnn::PointMatrix& x, const Eigen::VectorXd& q, const gpnn::KernelSpec& k,
                             double sf2, double ell) {
  Eigen::VectorXd v(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) s += (x(i, c) - q(c)) * (x(i, c) - q(c));
    v(i) = sf2 * k.value(std::sqrt(s) / ell);
  }
  return v;
}

inline Eigen::MatrixXd inverse(const Eigen::MatrixXd& a) { return a.fullPivLu().inverse(); }

/// log N(y; 0, K) through an LU determinant.
inline double log_density(const Eigen::MatrixXd& k, const Eigen::VectorXd& y) {
  const auto lu = k.fullPivLu();
  const double logdet = std::log(std::abs(lu.determinant()));
  return -0.5 * (y.dot(lu.solve(y)) + logdet + static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi));
}

inline double rel_err(double a, double ref) { return std::abs(a - ref) / std::max(std::abs(ref), 1e-300); }

}  // namespace oracle
