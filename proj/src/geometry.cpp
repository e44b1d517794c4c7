#include "mbip/geometry.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mbip {

std::string to_string(Shape shape) {
  switch (shape) {
    case Shape::flat_interval: return "flat_interval";
    case Shape::semi_ellipse: return "semi_ellipse";
    case Shape::semi_torus: return "semi_torus";
  }
  return "unknown";
}

std::string PointCloud::component_of(Index i) const {
  for (const auto& c : boundary_components)
    if (std::find(c.idx.begin(), c.idx.end(), i) != c.idx.end()) return c.label;
  return {};
}

namespace {

void fill_interior(PointCloud& cloud) {
  std::vector<bool> is_boundary(cloud.size(), false);
  for (Index b : cloud.boundary_idx) is_boundary[b] = true;
  cloud.interior_idx.clear();
  for (Index i = 0; i < cloud.size(); ++i)
    if (!is_boundary[i]) cloud.interior_idx.push_back(i);
}

PointCloud curve_endpoints_cloud(Shape shape, Eigen::MatrixXd points, Eigen::VectorXd param) {
  PointCloud cloud;
  cloud.shape = shape;
  cloud.points = std::move(points);
  cloud.intrinsic = std::move(param);
  cloud.d = 1;
  const Index n = cloud.points.rows();
  cloud.boundary_idx = {0, n - 1};
  cloud.boundary_components = {{"B1", {0}}, {"B2", {n - 1}}};
  fill_interior(cloud);
  return cloud;
}

}  // namespace

PointCloud generate_flat_interval(Index n) {
  if (n < 3) throw std::invalid_argument("flat interval needs n >= 3 points");
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  Eigen::MatrixXd pts = x;
  return curve_endpoints_cloud(Shape::flat_interval, std::move(pts), std::move(x));
}

PointCloud generate_semi_ellipse(Index n, double alpha_max) {
  if (n < 3) throw std::invalid_argument("semi-ellipse needs n >= 3 points");
  if (!(alpha_max > 0.0)) throw std::invalid_argument("semi-ellipse needs alpha_max > 0");
  Eigen::VectorXd alpha = Eigen::VectorXd::LinSpaced(n, 0.0, alpha_max);
  Eigen::MatrixXd pts(n, 2);
  for (Index i = 0; i < n; ++i) {
    pts(i, 0) = std::cos(alpha[i]);
    pts(i, 1) = 3.0 * std::sin(alpha[i]);
  }
  return curve_endpoints_cloud(Shape::semi_ellipse, std::move(pts), std::move(alpha));
}

PointCloud generate_semi_torus(Index n1, Index n2) {
  if (n1 < 3 || n2 < 3) throw std::invalid_argument("semi-torus grid needs n1, n2 >= 3");
  constexpr double pi = std::numbers::pi;
  PointCloud cloud;
  cloud.shape = Shape::semi_torus;
  cloud.d = 2;
  const Index n = n1 * n2;
  cloud.points.resize(n, 3);
  cloud.intrinsic.resize(n, 2);
  BoundaryComponent b1{"B1", {}}, b2{"B2", {}};
  // alpha-major: node (i, j) -> i * n2 + j
  for (Index i = 0; i < n1; ++i) {
    const double a = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n1);
    for (Index j = 0; j < n2; ++j) {
      const double b = pi * static_cast<double>(j) / static_cast<double>(n2 - 1);
      const Index k = i * n2 + j;
      const double r = 2.0 + std::cos(a);
      cloud.points(k, 0) = r * std::cos(b);
      cloud.points(k, 1) = r * std::sin(b);
      cloud.points(k, 2) = std::sin(a);
      cloud.intrinsic(k, 0) = a;
      cloud.intrinsic(k, 1) = b;
      if (j == 0) b1.idx.push_back(k);
      if (j == n2 - 1) b2.idx.push_back(k);
    }
  }
  cloud.boundary_idx = b1.idx;
  cloud.boundary_idx.insert(cloud.boundary_idx.end(), b2.idx.begin(), b2.idx.end());
  std::sort(cloud.boundary_idx.begin(), cloud.boundary_idx.end());
  cloud.boundary_components = {std::move(b1), std::move(b2)};
  fill_interior(cloud);
  return cloud;
}

GhostSet construct_ghost_points(const PointCloud& cloud, int K) {
  if (K < 1) throw std::invalid_argument("ghost count K must be positive");
  if (cloud.boundary_idx.empty()) throw std::invalid_argument("cloud has no boundary points");
  if (cloud.interior_idx.empty()) throw std::invalid_argument("cloud has no interior points");

  GhostSet ghosts;
  ghosts.K = K;
  const Index B = cloud.boundary_size();
  ghosts.points.resize(B * K, cloud.ambient_dim());

  for (Index bi = 0; bi < B; ++bi) {
    const Index b = cloud.boundary_idx[static_cast<std::size_t>(bi)];
    const Eigen::VectorXd xb = cloud.points.row(b).transpose();
    // nearest interior node; strict < keeps the lowest index on ties
    double best = std::numeric_limits<double>::infinity();
    Index companion = -1;
    for (Index i : cloud.interior_idx) {
      const double dist2 = (cloud.points.row(i).transpose() - xb).squaredNorm();
      if (dist2 < best) {
        best = dist2;
        companion = i;
      }
    }
    if (!(best > 0.0))
      throw std::invalid_argument("boundary point " + std::to_string(b) +
                                  " coincides with interior point " + std::to_string(companion));

    GhostChain chain;
    chain.boundary = b;
    chain.companion = companion;
    const Eigen::VectorXd diff = xb - cloud.points.row(companion).transpose();
    chain.spacing = diff.norm();
    chain.normal = diff / chain.spacing;
    for (int k = 1; k <= K; ++k)
      ghosts.points.row(bi * K + (k - 1)) =
          (xb + chain.spacing * static_cast<double>(k) * chain.normal).transpose();
    ghosts.chains.push_back(std::move(chain));
  }
  return ghosts;
}

Eigen::MatrixXd metric_tensor(Shape shape, std::span<const double> coords) {
  switch (shape) {
    case Shape::flat_interval:
      return Eigen::MatrixXd::Identity(1, 1);
    case Shape::semi_ellipse: {
      const double a = coords[0];
      Eigen::MatrixXd g(1, 1);
      g(0, 0) = std::sin(a) * std::sin(a) + 9.0 * std::cos(a) * std::cos(a);
      return g;
    }
    case Shape::semi_torus: {
      const double r = 2.0 + std::cos(coords[0]);
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
      g(0, 0) = 1.0;
      g(1, 1) = r * r;
      return g;
    }
  }
  throw std::invalid_argument("unknown shape");
}

namespace {

double checked(const IntrinsicField& field, std::span<const double> x) {
  const double v = field(x);
  if (!std::isfinite(v)) throw std::runtime_error("field evaluation returned a non-finite value");
  return v;
}

}  // namespace

double divergence_form(const IntrinsicField& kappa, const IntrinsicField& u,
                       Shape shape, std::span<const double> coords,
                       std::span<const double> steps) {
  const std::size_t d = coords.size();
  std::vector<double> y(coords.begin(), coords.end());

  // flux_i(x) = kappa sqrt|g| g^{ij} d_j u
  auto flux = [&](std::vector<double>& x, std::size_t i) {
    const Eigen::MatrixXd g = metric_tensor(shape, x);
    const Eigen::MatrixXd ginv = g.inverse();
    const double sqrt_det = std::sqrt(g.determinant());
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = steps[j];
      const double keep = x[j];
      x[j] = keep + h;
      const double up = checked(u, x);
      x[j] = keep - h;
      const double um = checked(u, x);
      x[j] = keep;
      acc += ginv(static_cast<Index>(i), static_cast<Index>(j)) * (up - um) / (2.0 * h);
    }
    return checked(kappa, x) * sqrt_det * acc;
  };

  double div = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double h = steps[i];
    const double keep = y[i];
    y[i] = keep + h;
    const double fp = flux(y, i);
    y[i] = keep - h;
    const double fm = flux(y, i);
    y[i] = keep;
    div += (fp - fm) / (2.0 * h);
  }
  const double sqrt_det = std::sqrt(metric_tensor(shape, coords).determinant());
  return -div / sqrt_det;
}

std::vector<double> intrinsic_spacing(const PointCloud& cloud) {
  std::vector<double> out(static_cast<std::size_t>(cloud.d), std::numeric_limits<double>::infinity());
  for (int axis = 0; axis < cloud.d; ++axis) {
    std::vector<double> vals(cloud.intrinsic.col(axis).data(),
                             cloud.intrinsic.col(axis).data() + cloud.size());
    std::sort(vals.begin(), vals.end());
    for (std::size_t i = 1; i < vals.size(); ++i) {
      const double gap = vals[i] - vals[i - 1];
      if (gap > 1e-14) out[static_cast<std::size_t>(axis)] = std::min(out[static_cast<std::size_t>(axis)], gap);
    }
  }
  return out;
}

Eigen::VectorXd manufacture_rhs(const IntrinsicField& kappa, const IntrinsicField& u,
                                const PointCloud& cloud, double refine) {
  if (refine < 8.0) throw std::invalid_argument("auxiliary grid must be at least 8x finer than the cloud");
  std::vector<double> steps = intrinsic_spacing(cloud);
  for (double& h : steps) {
    if (!std::isfinite(h)) throw std::invalid_argument("cloud has a degenerate intrinsic axis");
    h /= refine;
  }
  Eigen::VectorXd f(cloud.size());
  std::vector<double> x(static_cast<std::size_t>(cloud.d));
  for (Index n = 0; n < cloud.size(); ++n) {
    for (int a = 0; a < cloud.d; ++a) x[static_cast<std::size_t>(a)] = cloud.intrinsic(n, a);
    f[n] = divergence_form(kappa, u, cloud.shape, x, steps);
  }
  return f;
}

}  // namespace mbip
