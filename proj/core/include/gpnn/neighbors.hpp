#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "gpnn/hyperparams.hpp"
#include "gpnn/kernels.hpp"

namespace gpnn {

/// Row-major n x d point matrix (one point per row).
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NeighborSet {
  Eigen::VectorXd query;
  std::vector<std::size_t> indices;  // increasing distance, ties by index
  std::vector<double> distances;

  std::size_t size() const noexcept { return indices.size(); }
  /// Distance to the m-th neighbour.
  double d_m() const { return distances.empty() ? 0.0 : distances.back(); }
};

struct NeighborGeometry {
  double d_m = 0.0;
  double eps_m = 0.0;
  double eps_E = 0.0;
  double eps_E2 = 0.0;
};

/// Exact Euclidean kNN index: kd-tree (leaf size 16) or brute force when
/// d > 20 or n < 256.  Immutable after construction; queries are thread safe.
class KnnIndex {
 public:
  static constexpr std::size_t kLeafSize = 16;
  static constexpr std::size_t kBruteForceMaxN = 256;
  static constexpr std::size_t kBruteForceMinDim = 21;

  explicit KnnIndex(PointMatrix points);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const PointMatrix& points() const noexcept { return points_; }
  bool uses_tree() const noexcept { return !nodes_.empty(); }

  NeighborSet knn(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t m) const;

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int split_dim;           // -1 for leaves
    double split;
    std::size_t left, right;
  };
  std::size_t build(std::size_t begin, std::size_t end);

  PointMatrix points_;
  std::vector<std::size_t> order_;
  PointMatrix ordered_;  // points_ permuted into tree order
  std::vector<Node> nodes_;

  friend struct KnnSearch;
};

KnnIndex build_index(PointMatrix points);

NeighborSet knn(const KnnIndex& index, const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t m);

/// Neighbour coordinates as an m x d matrix in neighbour order.
PointMatrix gather_rows(const PointMatrix& points, const std::vector<std::size_t>& indices);

/// Pairwise kernel-metric matrix E_ij = rho_c^2(x_i, x_j) of the neighbours.
Eigen::MatrixXd neighbor_metric_matrix(const PointMatrix& neighbours, const KernelSpec& kernel, double lengthscale);

NeighborGeometry neighbor_geometry(const NeighborSet& ns, const PointMatrix& points, const KernelSpec& kernel,
                                   const HyperParams& theta);

}  // namespace gpnn
