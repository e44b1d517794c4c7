#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbip/geometry.hpp"
#include "mbip/graph_ops.hpp"

namespace mbip {

using Rng = std::mt19937_64;

/// How c_N is summed: over the retained m eigenvalues (unit mean node
/// variance of the realized interior term) or over all N eigenvalues.
enum class Normalization { retained, full };

struct MaternSpec {
  double tau = 0.2;
  double s = 4.0;
  Index m = 20;
  double c_N = 1.0;
  Normalization normalization = Normalization::retained;

  void validate(int d, Index n) const;
};

/// c_N = N / sum_n (tau + lambda_n)^{-s}, eigenvalues clamped at zero.
double normalization_constant(const Eigen::VectorXd& eigenvalues, double tau, double s, Index n);

/// Builds a spec whose c_N matches `spectrum_all` (all available eigenvalues)
/// under the chosen normalization, keeping the first m for sampling.
MaternSpec make_matern_spec(double tau, double s, Index m, const Eigen::VectorXd& spectrum_all,
                            Index n, Normalization normalization = Normalization::retained);

/// Harmonic lifts of one boundary component.
struct LiftGroup {
  std::string label;
  std::vector<Index> nodes;        // the component's cloud indices
  Eigen::MatrixXd boundary_data;   // |nodes| x L, the prescribed values
  Eigen::MatrixXd lifts;           // N x L
};

struct BoundaryBasis {
  std::vector<LiftGroup> groups;

  Index lift_count() const;
  /// All lifts side by side, N x lift_count().
  Eigen::MatrixXd matrix(Index n) const;
};

/// L smallest-eigenvalue eigenvectors of the self-tuned Laplacian built on
/// the component's nodes alone; |nodes| x L.
Eigen::MatrixXd boundary_eigenbasis(const PointCloud& cloud, const std::string& component, Index L, int k_nn);

/// Boundary data for point components (1D manifolds): a single unit value.
Eigen::MatrixXd unit_boundary_data();

/// Solves one harmonic problem per column of each component's data, with
/// zero on every other component.
BoundaryBasis build_boundary_basis(const PointCloud& cloud, const GhostSet& ghosts, double epsilon,
                                   const std::vector<std::pair<std::string, Eigen::MatrixXd>>& eigenbases);

struct PriorSample {
  Eigen::VectorXd zeta;     // m interior coefficients
  Eigen::VectorXd mu;       // boundary coefficients
  Eigen::VectorXd theta_N;  // node values
};

/// sqrt(c_N) sum_n (tau + lambda_n)^{-s/2} zeta_n phi_n + sum mu psi.
Eigen::VectorXd reconstruct(const MaternSpec& spec, const SpectralDecomposition& spectrum,
                            const BoundaryBasis& basis, const Eigen::VectorXd& zeta,
                            const Eigen::VectorXd& mu);

PriorSample sample_prior(const MaternSpec& spec, const SpectralDecomposition& spectrum,
                         const BoundaryBasis& basis, Rng& rng);

/// Prior bundle used by the forward maps and the sampler; coefficients are
/// stacked as (zeta, mu).
class PriorModel {
 public:
  PriorModel(MaternSpec spec, SpectralDecomposition spectrum, BoundaryBasis basis, Index n);

  Index node_count() const { return n_; }
  Index interior_count() const { return spec_.m; }
  Index boundary_count() const { return basis_.lift_count(); }
  Index coefficient_count() const { return interior_count() + boundary_count(); }

  /// Per-mode amplitudes sqrt(c_N) (tau + lambda_n)^{-s/2}.
  Eigen::VectorXd interior_scales() const;

  Eigen::VectorXd reconstruct(const Eigen::VectorXd& coefficients) const;
  Eigen::VectorXd interior_part(const Eigen::VectorXd& coefficients) const;
  Eigen::VectorXd boundary_part(const Eigen::VectorXd& coefficients) const;

  PriorSample sample(Rng& rng) const;
  Eigen::VectorXd stack(const Eigen::VectorXd& zeta, const Eigen::VectorXd& mu) const;

  const MaternSpec& spec() const { return spec_; }
  const SpectralDecomposition& spectrum() const { return spectrum_; }
  const BoundaryBasis& basis() const { return basis_; }
  const Eigen::MatrixXd& lift_matrix() const { return lifts_; }

 private:
  MaternSpec spec_;
  SpectralDecomposition spectrum_;
  BoundaryBasis basis_;
  Index n_;
  Eigen::MatrixXd lifts_;
};

/// Draws a vector of i.i.d. standard normals.
Eigen::VectorXd standard_normal(Index n, Rng& rng);

}  // namespace mbip
