#include "mbip/interp.hpp"

#include <stdexcept>

#include "mbip/graph_ops.hpp"

namespace mbip {

Eigen::VectorXd knn_interpolate(const Eigen::VectorXd& theta_N, const PointCloud& cloud,
                                const Eigen::MatrixXd& queries, const InterpConfig& config) {
  const Index n = cloud.size();
  if (n == 0) throw std::invalid_argument("cannot interpolate from an empty cloud");
  if (theta_N.size() != n) throw std::invalid_argument("node function length differs from cloud size");
  if (config.k < 1 || config.k > n) throw std::invalid_argument("neighbor count k must lie in [1, N]");
  if (queries.cols() != cloud.ambient_dim()) throw std::invalid_argument("query dimension differs from the cloud");
  if (!queries.allFinite()) throw std::invalid_argument("queries must be finite");

  Eigen::VectorXd out(queries.rows());
  for (Index q = 0; q < queries.rows(); ++q) {
    const std::vector<Index> nbrs = nearest_neighbors(cloud.points, queries.row(q).transpose(), config.k);
    double sum = 0.0;
    for (Index i : nbrs) sum += theta_N[i];
    out[q] = sum / static_cast<double>(config.k);
  }
  return out;
}

}  // namespace mbip
