#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mbip/geometry.hpp"

using namespace mbip;
using std::numbers::pi;

TEST_CASE("semi-ellipse cloud has the documented shape") {
  const PointCloud c = generate_semi_ellipse(630);
  CHECK(c.size() == 630);
  CHECK(c.boundary_size() == 2);
  CHECK(c.boundary_idx == std::vector<Index>{0, 629});
  CHECK(c.interior_idx.size() == 628);
  CHECK(c.d == 1);
  CHECK(c.ambient_dim() == 2);
  CHECK(c.points(0, 0) == doctest::Approx(1.0));
  CHECK(c.points(0, 1) == doctest::Approx(0.0));
  CHECK(c.intrinsic(629, 0) == doctest::Approx(pi));

  const PointCloud odd = generate_semi_ellipse(5);
  CHECK(odd.points(2, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(odd.points(2, 1) == doctest::Approx(3.0));

  CHECK_THROWS_AS(generate_semi_ellipse(2), std::invalid_argument);
}

TEST_CASE("semi-ellipse metric gives the arclength element") {
  for (double a : {0.0, 0.4, pi / 2, 2.5}) {
    const double coords[] = {a};
    const Eigen::MatrixXd g = metric_tensor(Shape::semi_ellipse, coords);
    const double expected = std::sin(a) * std::sin(a) + 9.0 * std::cos(a) * std::cos(a);
    CHECK(std::sqrt(g(0, 0)) == doctest::Approx(std::sqrt(expected)).epsilon(1e-12));
  }
}

TEST_CASE("semi-torus grid") {
  const PointCloud c = generate_semi_torus(36, 36);
  CHECK(c.size() == 1296);
  CHECK(c.boundary_size() == 72);
  REQUIRE(c.boundary_components.size() == 2);
  CHECK(c.boundary_components[0].idx.size() == 36);
  CHECK(c.boundary_components[1].idx.size() == 36);
  CHECK(c.d == 2);
  CHECK(c.ambient_dim() == 3);
  CHECK(c.points(0, 0) == doctest::Approx(3.0));
  CHECK(c.points(0, 1) == doctest::Approx(0.0));
  CHECK(c.points(0, 2) == doctest::Approx(0.0));

  // alpha periodic without the 2 pi duplicate
  double max_alpha = 0.0;
  for (Index i = 0; i < c.size(); ++i) max_alpha = std::max(max_alpha, c.intrinsic(i, 0));
  CHECK(max_alpha < 2 * pi - 1e-6);

  const double coords[] = {0.7, 1.1};
  const Eigen::MatrixXd g = metric_tensor(Shape::semi_torus, coords);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(0, 1) == doctest::Approx(0.0));
  CHECK(g(1, 1) == doctest::Approx(std::pow(2.0 + std::cos(0.7), 2)));

  CHECK_THROWS(generate_semi_torus(2, 36));
}

TEST_CASE("ghost points on a collinear cloud") {
  PointCloud c;
  c.points.resize(2, 2);
  c.points << 0, 0, 1, 0;
  c.intrinsic = Eigen::MatrixXd::Zero(2, 1);
  c.boundary_idx = {1};
  c.interior_idx = {0};
  c.boundary_components = {{"B1", {1}}};
  const GhostSet g = construct_ghost_points(c, 3);
  REQUIRE(g.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(g.points(k, 0) == doctest::Approx(2.0 + k));
    CHECK(g.points(k, 1) == doctest::Approx(0.0));
  }
  CHECK(g.chains[0].spacing == doctest::Approx(1.0));
  CHECK(g.chains[0].companion == 0);
}

TEST_CASE("ghost chains are exactly affine") {
  const PointCloud c = generate_semi_ellipse(630);
  const GhostSet g = construct_ghost_points(c, 10);
  CHECK(g.size() == 20);
  for (std::size_t b = 0; b < g.chains.size(); ++b) {
    const auto& chain = g.chains[b];
    CHECK(chain.spacing > 0.0);
    CHECK(chain.normal.norm() == doctest::Approx(1.0));
    const Eigen::VectorXd xb = c.points.row(chain.boundary).transpose();
    for (int k = 1; k <= g.K; ++k) {
      const Eigen::VectorXd expected = xb + chain.spacing * k * chain.normal;
      CHECK((g.points.row(static_cast<Index>(b) * g.K + k - 1).transpose() - expected).norm() == 0.0);
    }
  }

  const PointCloud torus = generate_semi_torus(36, 36);
  const GhostSet tg = construct_ghost_points(torus, 6);
  CHECK(tg.size() == 432);  // 216 per boundary circle
}

TEST_CASE("ghost construction rejects degenerate input") {
  PointCloud c;
  c.points.resize(2, 1);
  c.points << 0, 0;
  c.intrinsic = c.points;
  c.boundary_idx = {1};
  c.interior_idx = {0};
  CHECK_THROWS_AS(construct_ghost_points(c, 2), std::invalid_argument);

  PointCloud none = generate_semi_ellipse(10);
  none.boundary_idx.clear();
  CHECK_THROWS_AS(construct_ghost_points(none, 2), std::invalid_argument);
}

TEST_CASE("generators are deterministic") {
  CHECK(generate_semi_ellipse(100).points == generate_semi_ellipse(100).points);
  CHECK(generate_semi_torus(12, 9).points == generate_semi_torus(12, 9).points);
}

TEST_CASE("manufactured right-hand side on the flat interval") {
  const PointCloud c = generate_flat_interval(200);
  const IntrinsicField one = [](std::span<const double>) { return 1.0; };
  const IntrinsicField u = [](std::span<const double> a) { return std::sin(pi * a[0]); };
  const Eigen::VectorXd f = manufacture_rhs(one, u, c);
  double err = 0.0;
  for (Index i = 0; i < c.size(); ++i) err = std::max(err, std::abs(f[i] - pi * pi * std::sin(pi * c.intrinsic(i, 0))));
  CHECK(err <= 1e-6);

  const IntrinsicField three = [](std::span<const double>) { return 3.0; };
  const IntrinsicField constant = [](std::span<const double>) { return 5.0; };
  CHECK(manufacture_rhs(three, constant, c).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("manufactured right-hand side converges at second order") {
  const PointCloud c = generate_flat_interval(20);
  const IntrinsicField kappa = [](std::span<const double> a) { return 1.0 + a[0] * a[0]; };
  const IntrinsicField u = [](std::span<const double> a) { return std::sin(pi * a[0]); };
  // -(k u')' = -(2x u' + k u'')
  auto exact = [&](double x) {
    return -(2 * x * pi * std::cos(pi * x) - (1 + x * x) * pi * pi * std::sin(pi * x));
  };
  auto error = [&](double refine) {
    const Eigen::VectorXd f = manufacture_rhs(kappa, u, c, refine);
    double e = 0.0;
    for (Index i = 0; i < c.size(); ++i) e = std::max(e, std::abs(f[i] - exact(c.intrinsic(i, 0))));
    return e;
  };
  const double coarse = error(8.0), fine = error(16.0);
  CHECK(std::log2(coarse / fine) >= 1.9);
}

TEST_CASE("manufactured right-hand side matches a symbolic oracle on the semi-ellipse") {
  const PointCloud c = generate_semi_ellipse(630);
  const IntrinsicField kappa = [](std::span<const double> a) { return 2.0 + std::cos(3 * a[0]); };
  const IntrinsicField u = [](std::span<const double> a) { return std::sin(a[0]); };
  // f = -(1/G) (k u' / G)', G = sqrt(sin^2 + 9 cos^2)
  auto oracle = [](double a) {
    const double s = std::sin(a), co = std::cos(a);
    const double G = std::sqrt(s * s + 9 * co * co);
    const double dG = -16.0 * s * co / (2.0 * G);
    const double k = 2.0 + std::cos(3 * a), dk = -3.0 * std::sin(3 * a);
    const double dh = (dk * co - k * s) / G - k * co * dG / (G * G);
    return -dh / G;
  };
  const Eigen::VectorXd f = manufacture_rhs(kappa, u, c);
  Eigen::VectorXd ref(c.size());
  for (Index i = 0; i < c.size(); ++i) ref[i] = oracle(c.intrinsic(i, 0));
  CHECK((f - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("intrinsic spacing") {
  const auto h = intrinsic_spacing(generate_flat_interval(11));
  REQUIRE(h.size() == 1);
  CHECK(h[0] == doctest::Approx(0.1));
}
