#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mbip {

using Index = Eigen::Index;

struct KernelConfig {
  double epsilon = 0.0;  // squared-length units
  int k_closest = 2;
  int d = 1;

  void validate() const;
};

enum class OperatorKind { weighted_laplacian, self_tuned, truncated, gpdm };

std::string to_string(OperatorKind kind);

/// Interior/boundary split of an operator's index set.
struct BlockPartition {
  Index interior_size = 0;
  Index boundary_size = 0;
  /// permutation[p] = original index placed at position p (interior first).
  std::vector<Index> permutation;
};

struct GraphOperator {
  Eigen::MatrixXd matrix;
  OperatorKind kind = OperatorKind::weighted_laplacian;
  std::optional<BlockPartition> block;
  double epsilon = 0.0;  // 0 when the construction has no bandwidth

  Index size() const { return matrix.rows(); }
};

/// m smallest eigenpairs, ascending; columns of `eigenvectors` orthonormal.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  Index count() const { return eigenvalues.size(); }
};

struct EpsilonCalibration {
  double epsilon = 0.0;
  double slope = 0.0;
  std::vector<double> log_epsilon;
  std::vector<double> log_T;
  /// centered slope at log_epsilon[i]; NaN at both ends of the grid.
  std::vector<double> slopes;
};

/// 41 log-spaced candidates over [1e-6, 1e2].
std::vector<double> default_epsilon_grid();
std::vector<double> log_spaced(double lo, double hi, int count);

/// Squared Euclidean distances between the rows of a and b.
Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Chooses epsilon where log T(eps) has the steepest slope in log eps.
/// T sums exp(-|x_i - x_j|^2 / 4 eps) over the k_closest nearest points of
/// each x_i, x_i itself included, so log T -> log(N k_closest) as eps grows.
EpsilonCalibration calibrate_epsilon(const Eigen::MatrixXd& points, int k_closest,
                                     const std::vector<double>& grid = default_epsilon_grid());

Eigen::VectorXd kernel_density(const Eigen::MatrixXd& points, double epsilon, int d);

/// (W - D) / eps with W_ij = sqrt(k_i k_j) H_ij / Q_j.
GraphOperator weighted_laplacian(const Eigen::MatrixXd& points, const Eigen::VectorXd& kappa,
                                 double epsilon);

/// Symmetric normalized Laplacian of the density-normalized self-tuning kernel.
GraphOperator self_tuned_laplacian(const Eigen::MatrixXd& points, int k_nn);

/// Leading cloud_size x cloud_size principal block of an operator built over
/// cloud points followed by ghost points.
GraphOperator truncated_laplacian(const GraphOperator& full, Index cloud_size);

SpectralDecomposition spectral_decompose(const GraphOperator& op, Index m);
SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& symmetric, Index m);

/// Indices of the k nearest rows of `points` to `query`, ascending by
/// distance with ties resolved by lower index. `skip` is excluded.
std::vector<Index> nearest_neighbors(const Eigen::MatrixXd& points, const Eigen::VectorXd& query,
                                     Index k, Index skip = -1);

}  // namespace mbip
