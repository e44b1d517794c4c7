#include "mbip/graph_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mbip {

void KernelConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("kernel epsilon must be positive");
  if (k_closest < 2) throw std::invalid_argument("k_closest must be at least 2");
  if (d < 1) throw std::invalid_argument("intrinsic dimension must be at least 1");
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::weighted_laplacian: return "weighted_laplacian";
    case OperatorKind::self_tuned: return "self_tuned";
    case OperatorKind::truncated: return "truncated";
    case OperatorKind::gpdm: return "gpdm";
  }
  return "unknown";
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw std::invalid_argument("invalid log-spaced range");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return out;
}

std::vector<double> default_epsilon_grid() { return log_spaced(1e-6, 1e2, 41); }

Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("point sets differ in ambient dimension");
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index i = 0; i < a.rows(); ++i) out(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return out;
}

std::vector<Index> nearest_neighbors(const Eigen::MatrixXd& points, const Eigen::VectorXd& query,
                                     Index k, Index skip) {
  std::vector<std::pair<double, Index>> cand;
  cand.reserve(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i)
    if (i != skip) cand.emplace_back((points.row(i).transpose() - query).squaredNorm(), i);
  k = std::min<Index>(k, static_cast<Index>(cand.size()));
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
  std::vector<Index> out(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = cand[static_cast<std::size_t>(i)].second;
  return out;
}

EpsilonCalibration calibrate_epsilon(const Eigen::MatrixXd& points, int k_closest,
                                     const std::vector<double>& grid) {
  const Index n = points.rows();
  if (k_closest < 1 || k_closest >= n)
    throw std::invalid_argument("k_closest must lie in [1, N)");
  if (grid.size() < 8) throw std::invalid_argument("epsilon grid needs at least 8 candidates");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]) || !(grid[i - 1] > 0.0))
      throw std::invalid_argument("epsilon grid must be positive and increasing");
  if (std::log10(grid.back() / grid.front()) < 4.0 - 1e-12)
    throw std::invalid_argument("epsilon grid must span at least 4 decades");

  // k_closest nearest squared distances per point; the point itself is the
  // first of them at distance zero.
  const Eigen::MatrixXd d2 = pairwise_sq_distances(points, points);
  if (d2.maxCoeff() <= 0.0) throw std::invalid_argument("all points are identical");
  std::vector<double> near;
  near.reserve(static_cast<std::size_t>(n * k_closest));
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = d2(i, j);
    std::partial_sort(row.begin(), row.begin() + k_closest, row.end());
    near.insert(near.end(), row.begin(), row.begin() + k_closest);
  }

  EpsilonCalibration out;
  for (double eps : grid) {
    double t = 0.0;
    for (double v : near) t += std::exp(-v / (4.0 * eps));
    out.log_epsilon.push_back(std::log(eps));
    out.log_T.push_back(std::log(t));
  }
  const std::size_t g = grid.size();
  out.slopes.assign(g, std::numeric_limits<double>::quiet_NaN());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < g; ++i) {
    out.slopes[i] = (out.log_T[i + 1] - out.log_T[i - 1]) / (out.log_epsilon[i + 1] - out.log_epsilon[i - 1]);
    if (out.slopes[i] > best) {
      best = out.slopes[i];
      out.epsilon = grid[i];
      out.slope = out.slopes[i];
    }
  }
  return out;
}

Eigen::VectorXd kernel_density(const Eigen::MatrixXd& points, double epsilon, int d) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const Index n = points.rows();
  const double norm = std::pow(2.0, d) * std::pow(std::numbers::pi, 0.5 * d) * static_cast<double>(n) *
                      std::pow(epsilon, 0.5 * d);
  Eigen::VectorXd q(n);
  for (Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Index k = 0; k < n; ++k) s += std::exp(-(points.row(j) - points.row(k)).squaredNorm() / (4.0 * epsilon));
    q[j] = s / norm;
  }
  return q;
}

GraphOperator weighted_laplacian(const Eigen::MatrixXd& points, const Eigen::VectorXd& kappa,
                                 double epsilon) {
  const Index n = points.rows();
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (kappa.size() != n) throw std::invalid_argument("kappa length differs from point count");
  for (Index i = 0; i < n; ++i)
    if (!(kappa[i] > 0.0)) throw std::invalid_argument("kappa must be positive at every node");

  const Eigen::MatrixXd h = (-pairwise_sq_distances(points, points) / (4.0 * epsilon)).array().exp().matrix();
  const Eigen::VectorXd q = h.rowwise().sum();
  const Eigen::VectorXd root = kappa.array().sqrt().matrix();

  GraphOperator op;
  op.kind = OperatorKind::weighted_laplacian;
  op.epsilon = epsilon;
  op.matrix.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double w = root[i] * root[j] * h(i, j) / q[j];
      op.matrix(i, j) = w;
      row_sum += w;
    }
    op.matrix(i, i) -= row_sum;
  }
  op.matrix /= epsilon;
  return op;
}

GraphOperator self_tuned_laplacian(const Eigen::MatrixXd& points, int k_nn) {
  const Index n = points.rows();
  if (k_nn < 1 || k_nn >= n) throw std::invalid_argument("self-tuning k_nn must lie in [1, N)");
  const Eigen::MatrixXd d2 = pairwise_sq_distances(points, points);

  Eigen::VectorXd sigma(n);
  std::vector<double> row;
  for (Index i = 0; i < n; ++i) {
    row.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i) row.push_back(d2(i, j));
    std::nth_element(row.begin(), row.begin() + (k_nn - 1), row.end());
    sigma[i] = std::sqrt(row[static_cast<std::size_t>(k_nn - 1)]);
    if (!(sigma[i] > 0.0))
      throw std::invalid_argument("duplicate points give a zero self-tuning scale at node " + std::to_string(i));
  }

  Eigen::MatrixXd s(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) s(i, j) = std::exp(-d2(i, j) / (sigma[i] * sigma[j]));

  const Eigen::VectorXd p = s.rowwise().sum();
  Eigen::MatrixXd st = p.cwiseInverse().asDiagonal() * s * p.cwiseInverse().asDiagonal();
  const Eigen::VectorXd r_isqrt = st.rowwise().sum().array().rsqrt().matrix();

  GraphOperator op;
  op.kind = OperatorKind::self_tuned;
  op.matrix = -(r_isqrt.asDiagonal() * st * r_isqrt.asDiagonal());
  op.matrix.diagonal().array() += 1.0;
  op.matrix = 0.5 * (op.matrix + op.matrix.transpose()).eval();
  return op;
}

GraphOperator truncated_laplacian(const GraphOperator& full, Index cloud_size) {
  if (cloud_size < 1 || cloud_size > full.size())
    throw std::invalid_argument("truncation size must lie in [1, full size]");
  if (full.block && full.block->interior_size + full.block->boundary_size != full.size())
    throw std::invalid_argument("operator block metadata does not match its size");
  GraphOperator out;
  out.kind = OperatorKind::truncated;
  out.epsilon = full.epsilon;
  out.matrix = full.matrix.topLeftCorner(cloud_size, cloud_size);
  return out;
}

SpectralDecomposition spectral_decompose(const GraphOperator& op, Index m) {
  if (op.kind == OperatorKind::weighted_laplacian || op.kind == OperatorKind::gpdm)
    throw std::invalid_argument(to_string(op.kind) + " operators are not symmetric; solve them instead");
  return spectral_decompose(op.matrix, m);
}

SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& a, Index m) {
  const Index n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("matrix must be square");
  if (m < 1 || m > n) throw std::invalid_argument("eigenpair count must lie in [1, N]");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver did not converge");

  SpectralDecomposition out;
  out.eigenvalues = es.eigenvalues().head(m);
  out.eigenvectors = es.eigenvectors().leftCols(m);
  for (Index c = 0; c < m; ++c) {
    auto v = out.eigenvectors.col(c);
    const double tol = 1e-10 * v.cwiseAbs().maxCoeff();
    for (Index i = 0; i < n; ++i) {
      if (std::abs(v[i]) > tol) {
        if (v[i] < 0.0) v = -v;
        break;
      }
    }
  }
  return out;
}

}  // namespace mbip
