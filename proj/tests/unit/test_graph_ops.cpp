#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "mbip/geometry.hpp"
#include "mbip/graph_ops.hpp"

using namespace mbip;
using std::numbers::pi;

namespace {

Eigen::MatrixXd unit_circle(Index n) {
  Eigen::MatrixXd p(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double a = 2 * pi * static_cast<double>(i) / static_cast<double>(n);
    p(i, 0) = std::cos(a);
    p(i, 1) = std::sin(a);
  }
  return p;
}

Eigen::MatrixXd augmented(const PointCloud& c, const GhostSet& g) {
  Eigen::MatrixXd all(c.size() + g.size(), c.ambient_dim());
  all << c.points, g.points;
  return all;
}

}  // namespace

TEST_CASE("epsilon calibration recovers half the intrinsic dimension") {
  const PointCloud ellipse = generate_semi_ellipse(630);
  const EpsilonCalibration c1 = calibrate_epsilon(ellipse.points, 51);
  CHECK(std::abs(c1.slope - 0.5) <= 0.15);
  CHECK(c1.log_epsilon.size() == 41);
  CHECK(c1.epsilon > 0.0);

  const PointCloud torus = generate_semi_torus(36, 36);
  const EpsilonCalibration c2 = calibrate_epsilon(torus.points, 128);
  CHECK(std::abs(c2.slope - 1.0) <= 0.15);
}

TEST_CASE("epsilon calibration saturates for very large epsilon") {
  const PointCloud c = generate_semi_ellipse(50);
  const int K = 5;
  const EpsilonCalibration cal = calibrate_epsilon(c.points, K, log_spaced(1e-4, 1e8, 25));
  CHECK(cal.log_T.back() == doctest::Approx(std::log(50.0 * K)).epsilon(1e-6));
  CHECK(std::abs(cal.slopes[cal.slopes.size() - 2]) < 1e-6);
}

TEST_CASE("epsilon calibration rejects bad input") {
  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(10, 2);
  CHECK_THROWS(calibrate_epsilon(same, 3));
  CHECK_THROWS(calibrate_epsilon(unit_circle(20), 3, log_spaced(1e-3, 1e-2, 3)));
  CHECK_THROWS(calibrate_epsilon(unit_circle(20), 25));
}

TEST_CASE("kernel density") {
  Eigen::MatrixXd one(1, 1);
  one << 0.3;
  const double eps = 0.04;
  CHECK(kernel_density(one, eps, 1)[0] == doctest::Approx(1.0 / (2.0 * std::sqrt(pi) * std::sqrt(eps))));

  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 0.5, 2.0;
  Eigen::MatrixXd perm(3, 1);
  perm << 2.0, 0.0, 0.5;
  const Eigen::VectorXd q = kernel_density(pts, 0.1, 1);
  const Eigen::VectorXd qp = kernel_density(perm, 0.1, 1);
  CHECK(qp[0] == doctest::Approx(q[2]));
  CHECK(qp[1] == doctest::Approx(q[0]));
  CHECK(qp[2] == doctest::Approx(q[1]));
  CHECK((q.array() > 0).all());

  const Eigen::MatrixXd circle = unit_circle(200);
  const EpsilonCalibration cal = calibrate_epsilon(circle, 20);
  const Eigen::VectorXd qc = kernel_density(circle, cal.epsilon, 1);
  CHECK(((qc * 2 * pi).array() - 1.0).abs().maxCoeff() <= 0.1);
}

TEST_CASE("weighted Laplacian") {
  SUBCASE("two points by hand") {
    Eigen::MatrixXd p(2, 1);
    p << 0.0, 0.7;
    const double eps = 0.2;
    const GraphOperator L = weighted_laplacian(p, Eigen::VectorXd::Ones(2), eps);
    const double e = std::exp(-0.49 / (4 * eps));
    const double off = e / (1 + e) / eps;
    CHECK(L.matrix(0, 1) == doctest::Approx(off));
    CHECK(L.matrix(1, 0) == doctest::Approx(off));
    CHECK(L.matrix(0, 0) == doctest::Approx(-off));
    CHECK(L.matrix(1, 1) == doctest::Approx(-off));
    CHECK(L.kind == OperatorKind::weighted_laplacian);
  }

  SUBCASE("constants in the null space and homogeneity in kappa") {
    const PointCloud c = generate_semi_ellipse(120);
    Eigen::VectorXd kappa(c.size());
    for (Index i = 0; i < c.size(); ++i) kappa[i] = 1.5 + std::sin(3.0 * i);
    const GraphOperator L = weighted_laplacian(c.points, kappa, 1e-3);
    const double scale = L.matrix.cwiseAbs().maxCoeff();
    CHECK((L.matrix * Eigen::VectorXd::Ones(c.size())).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    const GraphOperator L3 = weighted_laplacian(c.points, 3.0 * kappa, 1e-3);
    CHECK((L3.matrix - 3.0 * L.matrix).cwiseAbs().maxCoeff() <= 1e-10 * 3.0 * scale);
  }

  SUBCASE("circle eigenfunction") {
    const Eigen::MatrixXd circle = unit_circle(400);
    const EpsilonCalibration cal = calibrate_epsilon(circle, 51);
    const GraphOperator L = weighted_laplacian(circle, Eigen::VectorXd::Ones(400), cal.epsilon);
    Eigen::VectorXd u(400);
    for (Index i = 0; i < 400; ++i) u[i] = circle(i, 1);
    // (W - D)/eps approximates +div grad, so L sin = -sin
    CHECK((L.matrix * u + u).cwiseAbs().maxCoeff() / u.cwiseAbs().maxCoeff() <= 0.1);
  }

  SUBCASE("rejects non-positive kappa") {
    Eigen::MatrixXd p(2, 1);
    p << 0.0, 1.0;
    CHECK_THROWS(weighted_laplacian(p, Eigen::Vector2d(1.0, 0.0), 0.1));
  }
}

TEST_CASE("self-tuned Laplacian") {
  const PointCloud c = generate_semi_ellipse(200);
  const int k_nn = 2;
  const GraphOperator L = self_tuned_laplacian(c.points, k_nn);
  CHECK(L.kind == OperatorKind::self_tuned);
  CHECK((L.matrix - L.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.matrix);
  const double lmax = es.eigenvalues().maxCoeff();
  CHECK(es.eigenvalues().minCoeff() >= -1e-8 * lmax);
  CHECK(std::abs(es.eigenvalues()[0]) <= 1e-10);

  // independent rebuild of the null vector R^{1/2} 1
  const Index n = c.size();
  Eigen::VectorXd sigma(n);
  for (Index i = 0; i < n; ++i) {
    const auto nn = nearest_neighbors(c.points, c.points.row(i).transpose(), k_nn, i);
    sigma[i] = (c.points.row(i) - c.points.row(nn.back())).norm();
  }
  Eigen::MatrixXd S(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      S(i, j) = std::exp(-(c.points.row(i) - c.points.row(j)).squaredNorm() / (sigma[i] * sigma[j]));
  const Eigen::VectorXd p = S.rowwise().sum();
  const Eigen::MatrixXd St = p.cwiseInverse().asDiagonal() * S * p.cwiseInverse().asDiagonal();
  const Eigen::VectorXd r_half = St.rowwise().sum().cwiseSqrt();
  CHECK((L.matrix * r_half).norm() <= 1e-10 * r_half.norm());

  const SpectralDecomposition sd = spectral_decompose(L, 1);
  CHECK(std::abs(sd.eigenvectors.col(0).dot(r_half.normalized())) == doctest::Approx(1.0).epsilon(1e-10));

  Eigen::MatrixXd dup = Eigen::MatrixXd::Zero(4, 2);
  CHECK_THROWS(self_tuned_laplacian(dup, 2));
}

TEST_CASE("truncated Laplacian over cloud and ghosts") {
  const PointCloud c = generate_semi_ellipse(630);
  const GhostSet g = construct_ghost_points(c, 10);
  const GraphOperator full = self_tuned_laplacian(augmented(c, g), 2);
  CHECK(full.size() == 650);
  const GraphOperator t = truncated_laplacian(full, c.size());
  CHECK(t.size() == 630);
  CHECK(t.kind == OperatorKind::truncated);
  CHECK(t.matrix == full.matrix.topLeftCorner(630, 630));
  CHECK((t.matrix - t.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  const SpectralDecomposition sd = spectral_decompose(t, 20);
  CHECK(sd.eigenvalues.minCoeff() >= -1e-8 * t.matrix.norm());
  for (Index n = 0; n < 20; ++n) {
    const Eigen::VectorXd v = sd.eigenvectors.col(n);
    double interior_max = 0.0;
    for (Index i : c.interior_idx) interior_max = std::max(interior_max, std::abs(v[i]));
    for (Index b : c.boundary_idx) CHECK(std::abs(v[b]) <= interior_max);
  }
  CHECK_THROWS(truncated_laplacian(full, 700));
}

TEST_CASE("spectral decomposition") {
  SUBCASE("two by two") {
    Eigen::Matrix2d a;
    a << 1, -1, -1, 1;
    const SpectralDecomposition sd = spectral_decompose(Eigen::MatrixXd(a), 2);
    CHECK(sd.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(sd.eigenvalues[1] == doctest::Approx(2.0));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(sd.eigenvectors(0, 0) == doctest::Approx(r));
    CHECK(sd.eigenvectors(1, 0) == doctest::Approx(r));
    CHECK(sd.eigenvectors(0, 1) == doctest::Approx(r));
    CHECK(sd.eigenvectors(1, 1) == doctest::Approx(-r));
  }

  SUBCASE("path graph closed form") {
    const Index n = 10;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i + 1 < n; ++i) {
      a(i, i + 1) = a(i + 1, i) = -1;
      a(i, i) += 1;
      a(i + 1, i + 1) += 1;
    }
    const SpectralDecomposition sd = spectral_decompose(a, n);
    for (Index k = 0; k < n; ++k) CHECK(sd.eigenvalues[k] == doctest::Approx(2 - 2 * std::cos(k * pi / n)).epsilon(1e-10));
    const double an = a.norm();
    for (Index k = 0; k < n; ++k) {
      const Eigen::VectorXd v = sd.eigenvectors.col(k);
      CHECK((a * v - sd.eigenvalues[k] * v).norm() <= 1e-8 * (1 + std::abs(sd.eigenvalues[k])) * an);
      Index first = 0;
      while (std::abs(v[first]) < 1e-12) ++first;
      CHECK(v[first] > 0);
    }
    CHECK((sd.eigenvectors.transpose() * sd.eigenvectors - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("non-symmetric operators are rejected") {
    const PointCloud c = generate_semi_ellipse(20);
    Eigen::VectorXd kappa = Eigen::VectorXd::LinSpaced(20, 1.0, 3.0);
    CHECK_THROWS(spectral_decompose(weighted_laplacian(c.points, kappa, 0.05), 3));
  }
}

TEST_CASE("nearest neighbors break ties by index") {
  Eigen::MatrixXd p(4, 1);
  p << 0.0, 2.0, 1.0, 1.0;
  const auto nn = nearest_neighbors(p, Eigen::VectorXd::Constant(1, 1.0), 3);
  CHECK(nn == std::vector<Index>{2, 3, 0});
  CHECK(nearest_neighbors(p, Eigen::VectorXd::Constant(1, 1.0), 2, 2) == std::vector<Index>{3, 0});
}

TEST_CASE("graph constructions are deterministic") {
  const PointCloud c = generate_semi_ellipse(80);
  CHECK(self_tuned_laplacian(c.points, 2).matrix == self_tuned_laplacian(c.points, 2).matrix);
  const Eigen::VectorXd kappa = Eigen::VectorXd::Constant(80, 2.0);
  CHECK(weighted_laplacian(c.points, kappa, 0.01).matrix == weighted_laplacian(c.points, kappa, 0.01).matrix);
}
