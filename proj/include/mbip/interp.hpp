#pragma once

#include <Eigen/Core>

#include "mbip/geometry.hpp"

namespace mbip {

struct InterpConfig {
  Index k = 1;
};

/// Mean of theta over the k ambient-nearest cloud points of each query row;
/// equidistant points are taken in index order.
Eigen::VectorXd knn_interpolate(const Eigen::VectorXd& theta_N, const PointCloud& cloud,
                                const Eigen::MatrixXd& queries, const InterpConfig& config);

}  // namespace mbip
