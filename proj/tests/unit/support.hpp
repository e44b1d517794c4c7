#pragma once

#include <memory>

#include "mbip/geometry.hpp"
#include "mbip/ghost_operator.hpp"
#include "mbip/graph_ops.hpp"
#include "mbip/prior.hpp"

namespace test_support {

using namespace mbip;

/// Semi-ellipse with ghosts, calibrated bandwidth and a boundary-aware prior.
struct EllipseFixture {
  PointCloud cloud;
  GhostSet ghosts;
  double eps = 0.0;
  SpectralDecomposition full_spectrum;
  std::unique_ptr<PriorModel> prior;
};

inline EllipseFixture ellipse_fixture(Index n, Index m, double tau = 0.2, double s = 4.0,
                                      Normalization norm = Normalization::retained, Index spectrum_count = -1) {
  EllipseFixture f;
  f.cloud = generate_semi_ellipse(n);
  f.ghosts = construct_ghost_points(f.cloud, 10);
  f.eps = calibrate_epsilon(f.cloud.points, 51).epsilon;
  Eigen::MatrixXd all(f.cloud.size() + f.ghosts.size(), 2);
  all << f.cloud.points, f.ghosts.points;
  const GraphOperator trunc = truncated_laplacian(self_tuned_laplacian(all, 2), n);
  f.full_spectrum = spectral_decompose(trunc, spectrum_count < 0 ? n : spectrum_count);
  const MaternSpec spec = make_matern_spec(tau, s, m, f.full_spectrum.eigenvalues, n, norm);
  BoundaryBasis basis = build_boundary_basis(f.cloud, f.ghosts, f.eps,
                                             {{"B1", unit_boundary_data()}, {"B2", unit_boundary_data()}});
  f.prior = std::make_unique<PriorModel>(spec, f.full_spectrum, std::move(basis), n);
  return f;
}

}  // namespace test_support
