#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mbip {

using Index = Eigen::Index;

/// Built-in test manifolds. The shape decides which analytic metric is
/// used by manufacture_rhs; operator construction never looks at it.
enum class Shape { flat_interval, semi_ellipse, semi_torus };

std::string to_string(Shape shape);

struct BoundaryComponent {
  std::string label;
  std::vector<Index> idx;
};

/// Sampled manifold. Rows of `points` are ambient coordinates (N x D),
/// rows of `intrinsic` the chart coordinates (N x d).
struct PointCloud {
  Shape shape = Shape::flat_interval;
  Eigen::MatrixXd points;
  Eigen::MatrixXd intrinsic;
  std::vector<Index> boundary_idx;
  std::vector<Index> interior_idx;
  std::vector<BoundaryComponent> boundary_components;
  int d = 1;

  Index size() const { return points.rows(); }
  int ambient_dim() const { return static_cast<int>(points.cols()); }
  Index boundary_size() const { return static_cast<Index>(boundary_idx.size()); }

  /// Component label of node i, or an empty string for interior nodes.
  std::string component_of(Index i) const;
};

/// Ghost chains x_{b,k} = x_b + h k v_b for every boundary node.
struct GhostChain {
  Index boundary = 0;   // index of x_b in the cloud
  Index companion = 0;  // index of x_{b,0}, nearest interior node
  Eigen::VectorXd normal;
  double spacing = 0.0;
};

struct GhostSet {
  int K = 0;
  std::vector<GhostChain> chains;
  /// (B*K) x D, ordered boundary-major then k = 1..K.
  Eigen::MatrixXd points;

  Index size() const { return points.rows(); }
};

PointCloud generate_flat_interval(Index n);

/// alpha uniformly spaced on [0, alpha_max] with both endpoints.
PointCloud generate_semi_ellipse(Index n, double alpha_max = 3.14159265358979323846);

/// n1 periodic alpha samples (endpoint excluded) by n2 beta samples on [0, pi].
PointCloud generate_semi_torus(Index n1, Index n2);

GhostSet construct_ghost_points(const PointCloud& cloud, int K);

/// Riemannian metric tensor (d x d) of the shape at intrinsic coordinates.
Eigen::MatrixXd metric_tensor(Shape shape, std::span<const double> coords);

using IntrinsicField = std::function<double(std::span<const double>)>;

/// f = -(1/sqrt|g|) d_i (kappa g^{ij} d_j u sqrt|g|) at every cloud node.
/// Derivatives are nested central differences with step equal to the
/// cloud's intrinsic spacing divided by `refine` (refine >= 8).
Eigen::VectorXd manufacture_rhs(const IntrinsicField& kappa,
                                const IntrinsicField& u,
                                const PointCloud& cloud,
                                double refine = 32.0);

/// Same operator at explicit coordinates with one difference step per axis.
double divergence_form(const IntrinsicField& kappa, const IntrinsicField& u,
                       Shape shape, std::span<const double> coords,
                       std::span<const double> steps);

/// Smallest positive spacing along each intrinsic axis.
std::vector<double> intrinsic_spacing(const PointCloud& cloud);

}  // namespace mbip
