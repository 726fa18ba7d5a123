#include "gpnn/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <utility>

#include "gpnn/errors.hpp"

namespace gpnn {
namespace {

using Candidate = std::pair<double, std::size_t>;  // (squared distance, original index)

template <class RowA, class RowB>
double sq_dist(const RowA& a, const RowB& b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

NeighborSet to_set(const Eigen::Ref<const Eigen::VectorXd>& query, std::vector<Candidate>& best) {
  std::sort(best.begin(), best.end());
  NeighborSet ns;
  ns.query = query;
  ns.indices.reserve(best.size());
  ns.distances.reserve(best.size());
  for (const auto& [d2, i] : best) {
    ns.indices.push_back(i);
    ns.distances.push_back(std::sqrt(d2));
  }
  return ns;
}

}  // namespace

struct KnnSearch {
  const KnnIndex& idx;
  const double* q;
  std::size_t m;
  // max-heap on (d2, index): top is the current worst candidate
  std::priority_queue<Candidate> heap;

  void offer(double d2, std::size_t id) {
    if (heap.size() < m) {
      heap.emplace(d2, id);
    } else if (Candidate{d2, id} < heap.top()) {
      heap.pop();
      heap.emplace(d2, id);
    }
  }

  void visit(std::size_t node_id) {
    const auto& node = idx.nodes_[node_id];
    const Eigen::Index d = idx.ordered_.cols();
    if (node.split_dim < 0) {
      for (std::size_t k = node.begin; k < node.end; ++k) offer(sq_dist(idx.ordered_.row(k), q, d), idx.order_[k]);
      return;
    }
    const double diff = q[node.split_dim] - node.split;
    const std::size_t near = diff <= 0.0 ? node.left : node.right;
    const std::size_t far = diff <= 0.0 ? node.right : node.left;
    visit(near);
    // <= keeps equidistant candidates with lower indices reachable
    if (heap.size() < m || diff * diff <= heap.top().first) visit(far);
  }
};

KnnIndex::KnnIndex(PointMatrix points) : points_(std::move(points)) {
  if (points_.rows() == 0) throw InputError("build_index: empty point set");
  if (points_.cols() == 0) throw InputError("build_index: zero-dimensional points");
  if (!points_.allFinite()) throw InputError("build_index: non-finite coordinates");
  if (size() < kBruteForceMaxN || dim() >= kBruteForceMinDim) return;
  order_.resize(size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * size() / kLeafSize + 1);
  build(0, size());
  ordered_.resize(points_.rows(), points_.cols());
  for (std::size_t k = 0; k < size(); ++k) ordered_.row(k) = points_.row(order_[k]);
}

std::size_t KnnIndex::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, -1, 0.0, 0, 0});
  if (end - begin <= kLeafSize) return id;

  const Eigen::Index d = points_.cols();
  int best_dim = 0;
  double best_spread = -1.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = points_(order_[begin], j), hi = lo;
    for (std::size_t k = begin + 1; k < end; ++k) {
      const double v = points_(order_[k], j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(j);
    }
  }
  if (best_spread <= 0.0) return id;  // all points identical: keep as leaf

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return points_(a, best_dim) < points_(b, best_dim); });
  const double split = points_(order_[mid], best_dim);
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].split_dim = best_dim;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

NeighborSet KnnIndex::knn(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t m) const {
  if (static_cast<std::size_t>(query.size()) != dim()) throw InputError("knn: query dimension mismatch");
  if (m == 0) throw InputError("knn: m must be positive");
  if (m > size()) throw InputError("knn: m exceeds the number of indexed points");
  const Eigen::VectorXd q = query;
  std::vector<Candidate> best;
  if (!uses_tree()) {
    best.resize(size());
    for (std::size_t i = 0; i < size(); ++i) best[i] = {sq_dist(points_.row(i), q.data(), points_.cols()), i};
    std::partial_sort(best.begin(), best.begin() + m, best.end());
    best.resize(m);
  } else {
    KnnSearch s{*this, q.data(), m, {}};
    s.visit(0);
    best.reserve(m);
    while (!s.heap.empty()) {
      best.push_back(s.heap.top());
      s.heap.pop();
    }
  }
  return to_set(query, best);
}

KnnIndex build_index(PointMatrix points) { return KnnIndex(std::move(points)); }

NeighborSet knn(const KnnIndex& index, const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t m) {
  return index.knn(query, m);
}

PointMatrix gather_rows(const PointMatrix& points, const std::vector<std::size_t>& indices) {
  PointMatrix out(static_cast<Eigen::Index>(indices.size()), points.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= static_cast<std::size_t>(points.rows())) throw InputError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(k)) = points.row(static_cast<Eigen::Index>(indices[k]));
  }
  return out;
}

Eigen::MatrixXd neighbor_metric_matrix(const PointMatrix& nb, const KernelSpec& kernel, double lengthscale) {
  const Eigen::Index m = nb.rows();
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double r = (nb.row(i) - nb.row(j)).norm() / lengthscale;
      E(i, j) = E(j, i) = 1.0 - kernel.value(r);
    }
  return E;
}

NeighborGeometry neighbor_geometry(const NeighborSet& ns, const PointMatrix& points, const KernelSpec& kernel,
                                   const HyperParams& theta) {
  theta.validate();
  if (ns.size() == 0) throw InputError("neighbor_geometry: empty neighbour set");
  const PointMatrix nb = gather_rows(points, ns.indices);
  if (nb.cols() != ns.query.size()) throw InputError("neighbor_geometry: query dimension mismatch");
  const double m = static_cast<double>(ns.size());
  const double ell = theta.lengthscale;

  NeighborGeometry g;
  g.d_m = ns.d_m();
  for (Eigen::Index i = 0; i < nb.rows(); ++i) {
    const double r = (nb.row(i).transpose() - ns.query).norm() / ell;
    g.eps_m = std::max(g.eps_m, 1.0 - kernel.value(r));
  }

  const Eigen::MatrixXd E = neighbor_metric_matrix(nb, kernel, ell);
  // ||A||_1 = max column absolute sum
  g.eps_E = E.cwiseAbs().colwise().sum().maxCoeff() / m;

  const double sf2 = theta.kernel_scale, sx2 = theta.noise_var;
  const Eigen::Index mi = nb.rows();
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(mi, mi);
  const Eigen::MatrixXd A = 2.0 * (sx2 / sf2) * E + E * ones + ones * E - E * E;
  const double pre = sf2 / (sx2 + m * sf2);
  g.eps_E2 = pre * pre * A.cwiseAbs().colwise().sum().maxCoeff();
  return g;
}

}  // namespace gpnn
