#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "mbip/geometry.hpp"
#include "mbip/graph_ops.hpp"

namespace mbip {

/// Closed-form solution of the second-difference extrapolation along each
/// ghost chain: u(x_{b,k}) = (k+1) u(x_b) - k u(x_{b,0}).
struct ExtrapolationMatrix {
  struct Row {
    Index boundary_col;
    double boundary_weight;   // k + 1
    Index companion_col;
    double companion_weight;  // -k
  };
  std::vector<Row> rows;  // boundary-major, k inner
  Index cols = 0;

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd to_dense() const;
  Index nonzeros() const;
};

ExtrapolationMatrix build_extrapolation(const PointCloud& cloud, const GhostSet& ghosts);

/// GPDM discretization of -div(kappa grad .) on the cloud with the
/// interior/boundary block split used by the Dirichlet solve.
struct GpdmOperator {
  Eigen::MatrixXd L_tilde;
  Eigen::MatrixXd interior_block;
  Eigen::MatrixXd interior_to_boundary;
  std::vector<Index> interior_idx;
  std::vector<Index> boundary_idx;
  /// interior indices followed by boundary indices
  std::vector<Index> permutation;
  double epsilon = 0.0;

  GraphOperator as_graph_operator() const;
};

/// Global sign applied to (L1 + L2 G) so that the assembled operator
/// approximates -div(kappa grad .), a positive operator. The kernel sum
/// (W - D)/eps itself approximates +div(kappa grad .).
inline constexpr double gpdm_sign = -1.0;

/// Geometry-only part of the GPDM assembly: kernel rows H_ij / Q_j from
/// every cloud node to every cloud and ghost node, plus the extrapolation.
/// Only the kappa-dependent factors are recomputed by assemble().
class GpdmAssembler {
 public:
  GpdmAssembler(const PointCloud& cloud, const GhostSet& ghosts, double epsilon);

  GpdmOperator assemble(const Eigen::VectorXd& kappa_at_cloud) const;

  /// Kappa at the ghosts: log-kappa extrapolated along each chain.
  Eigen::VectorXd ghost_kappa(const Eigen::VectorXd& kappa_at_cloud) const;

  const ExtrapolationMatrix& extrapolation() const { return extrap_; }
  Index cloud_size() const { return n_; }
  double epsilon() const { return epsilon_; }

 private:
  Index n_;
  double epsilon_;
  Eigen::MatrixXd hq_;  // N x (N + BK)
  ExtrapolationMatrix extrap_;
  std::vector<Index> interior_;
  std::vector<Index> boundary_;
};

GpdmOperator gpdm_operator(const PointCloud& cloud, const GhostSet& ghosts,
                           const Eigen::VectorXd& kappa_at_cloud, double epsilon);

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorized interior block, reusable across right-hand sides.
class DirichletSolver {
 public:
  static constexpr double max_condition = 1e12;
  static constexpr double max_residual = 1e-8;

  explicit DirichletSolver(const GpdmOperator& op);

  /// Returns u in cloud order with u_B = h_boundary exactly.
  Eigen::VectorXd solve(const Eigen::VectorXd& f_interior, const Eigen::VectorXd& h_boundary) const;

  double condition_estimate() const { return condition_; }

 private:
  Eigen::MatrixXd interior_to_boundary_;
  Eigen::MatrixXd interior_block_;
  std::vector<Index> interior_;
  std::vector<Index> boundary_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double condition_ = 0.0;
};

Eigen::VectorXd solve_dirichlet_elliptic(const GpdmOperator& op, const Eigen::VectorXd& f_interior,
                                         const Eigen::VectorXd& h_boundary);

Eigen::VectorXd solve_harmonic(const PointCloud& cloud, const GhostSet& ghosts, double epsilon,
                               const Eigen::VectorXd& boundary_values);

/// Solves -u'' = pi^2 sin(pi x) on a small flat interval and checks the
/// result against sin(pi x); throws if the frozen sign is wrong.
void verify_sign_convention();

}  // namespace mbip
