#include "mbip/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbip/ghost_operator.hpp"

namespace mbip {

void MaternSpec::validate(int d, Index n) const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(s > 0.5 * d)) throw std::invalid_argument("smoothness s must exceed d/2");
  if (m < 1 || m > n) throw std::invalid_argument("retained eigenpair count m must lie in [1, N]");
  if (!(c_N > 0.0) || !std::isfinite(c_N)) throw std::invalid_argument("normalization constant must be positive");
}

double normalization_constant(const Eigen::VectorXd& eigenvalues, double tau, double s, Index n) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (eigenvalues.size() == 0) throw std::invalid_argument("no eigenvalues supplied");
  double sum = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    const double lam = eigenvalues[i];
    if (lam < -1e-8) throw std::invalid_argument("eigenvalue below the -1e-8 clamping tolerance");
    const double base = tau + std::max(lam, 0.0);
    if (!(base > 0.0)) throw std::invalid_argument("tau + lambda must be positive");
    sum += std::pow(base, -s);
  }
  return static_cast<double>(n) / sum;
}

MaternSpec make_matern_spec(double tau, double s, Index m, const Eigen::VectorXd& spectrum_all, Index n,
                            Normalization normalization) {
  if (m < 1 || m > spectrum_all.size()) throw std::invalid_argument("m exceeds the available eigenvalues");
  MaternSpec spec;
  spec.tau = tau;
  spec.s = s;
  spec.m = m;
  spec.normalization = normalization;
  spec.c_N = normalization == Normalization::retained
                 ? normalization_constant(spectrum_all.head(m), tau, s, n)
                 : normalization_constant(spectrum_all, tau, s, n);
  return spec;
}

Index BoundaryBasis::lift_count() const {
  Index total = 0;
  for (const auto& g : groups) total += g.lifts.cols();
  return total;
}

Eigen::MatrixXd BoundaryBasis::matrix(Index n) const {
  Eigen::MatrixXd out(n, lift_count());
  Index col = 0;
  for (const auto& g : groups) {
    if (g.lifts.rows() != n) throw std::invalid_argument("lift length differs from node count");
    out.middleCols(col, g.lifts.cols()) = g.lifts;
    col += g.lifts.cols();
  }
  return out;
}

Eigen::MatrixXd boundary_eigenbasis(const PointCloud& cloud, const std::string& component, Index L, int k_nn) {
  const auto it = std::find_if(cloud.boundary_components.begin(), cloud.boundary_components.end(),
                               [&](const BoundaryComponent& c) { return c.label == component; });
  if (it == cloud.boundary_components.end()) throw std::invalid_argument("unknown boundary component " + component);
  const Index size = static_cast<Index>(it->idx.size());
  if (L < 1 || size < L + 1)
    throw std::invalid_argument("boundary component " + component + " has " + std::to_string(size) +
                                " nodes; need at least L + 1 = " + std::to_string(L + 1));
  Eigen::MatrixXd pts(size, cloud.ambient_dim());
  for (Index i = 0; i < size; ++i) pts.row(i) = cloud.points.row(it->idx[static_cast<std::size_t>(i)]);
  return spectral_decompose(self_tuned_laplacian(pts, k_nn), L).eigenvectors;
}

Eigen::MatrixXd unit_boundary_data() { return Eigen::MatrixXd::Ones(1, 1); }

BoundaryBasis build_boundary_basis(const PointCloud& cloud, const GhostSet& ghosts, double epsilon,
                                   const std::vector<std::pair<std::string, Eigen::MatrixXd>>& eigenbases) {
  const GpdmOperator op = gpdm_operator(cloud, ghosts, Eigen::VectorXd::Ones(cloud.size()), epsilon);
  const DirichletSolver solver(op);
  const Eigen::VectorXd zero_load = Eigen::VectorXd::Zero(static_cast<Index>(cloud.interior_idx.size()));

  // position of each cloud index inside boundary_idx
  std::vector<Index> slot(static_cast<std::size_t>(cloud.size()), -1);
  for (std::size_t b = 0; b < cloud.boundary_idx.size(); ++b)
    slot[static_cast<std::size_t>(cloud.boundary_idx[b])] = static_cast<Index>(b);

  BoundaryBasis basis;
  for (const auto& [label, data] : eigenbases) {
    const auto it = std::find_if(cloud.boundary_components.begin(), cloud.boundary_components.end(),
                                 [&](const BoundaryComponent& c) { return c.label == label; });
    if (it == cloud.boundary_components.end()) throw std::invalid_argument("unknown boundary component " + label);
    if (data.rows() != static_cast<Index>(it->idx.size()))
      throw std::invalid_argument("boundary data for " + label + " has the wrong number of rows");

    LiftGroup group;
    group.label = label;
    group.nodes = it->idx;
    group.boundary_data = data;
    group.lifts.resize(cloud.size(), data.cols());
    for (Index l = 0; l < data.cols(); ++l) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(cloud.boundary_size());
      for (std::size_t i = 0; i < it->idx.size(); ++i) h[slot[static_cast<std::size_t>(it->idx[i])]] = data(static_cast<Index>(i), l);
      group.lifts.col(l) = solver.solve(zero_load, h);
    }
    basis.groups.push_back(std::move(group));
  }
  return basis;
}

Eigen::VectorXd standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(n);
  for (Index i = 0; i < n; ++i) out[i] = normal(rng);
  return out;
}

namespace {

Eigen::VectorXd scales_of(const MaternSpec& spec, const SpectralDecomposition& spectrum) {
  if (spectrum.count() < spec.m) throw std::invalid_argument("spectrum holds fewer than m eigenpairs");
  Eigen::VectorXd out(spec.m);
  for (Index n = 0; n < spec.m; ++n)
    out[n] = std::sqrt(spec.c_N) * std::pow(spec.tau + std::max(spectrum.eigenvalues[n], 0.0), -0.5 * spec.s);
  return out;
}

}  // namespace

Eigen::VectorXd reconstruct(const MaternSpec& spec, const SpectralDecomposition& spectrum,
                            const BoundaryBasis& basis, const Eigen::VectorXd& zeta, const Eigen::VectorXd& mu) {
  if (zeta.size() != spec.m) throw std::invalid_argument("zeta length differs from m");
  if (mu.size() != basis.lift_count()) throw std::invalid_argument("mu length differs from the lift count");
  const Index n = spectrum.eigenvectors.rows();
  const Eigen::VectorXd weights = scales_of(spec, spectrum).cwiseProduct(zeta);
  Eigen::VectorXd theta = spectrum.eigenvectors.leftCols(spec.m) * weights;
  if (mu.size() > 0) theta += basis.matrix(n) * mu;
  return theta;
}

PriorSample sample_prior(const MaternSpec& spec, const SpectralDecomposition& spectrum,
                         const BoundaryBasis& basis, Rng& rng) {
  PriorSample out;
  out.zeta = standard_normal(spec.m, rng);
  out.mu = standard_normal(basis.lift_count(), rng);
  out.theta_N = reconstruct(spec, spectrum, basis, out.zeta, out.mu);
  return out;
}

PriorModel::PriorModel(MaternSpec spec, SpectralDecomposition spectrum, BoundaryBasis basis, Index n)
    : spec_(std::move(spec)), spectrum_(std::move(spectrum)), basis_(std::move(basis)), n_(n) {
  if (spectrum_.eigenvectors.rows() != n) throw std::invalid_argument("spectrum size differs from node count");
  if (spectrum_.count() < spec_.m) throw std::invalid_argument("spectrum holds fewer than m eigenpairs");
  spectrum_.eigenvalues.conservativeResize(spec_.m);
  spectrum_.eigenvectors.conservativeResize(Eigen::NoChange, spec_.m);
  lifts_ = basis_.matrix(n);
}

Eigen::VectorXd PriorModel::interior_scales() const { return scales_of(spec_, spectrum_); }

Eigen::VectorXd PriorModel::stack(const Eigen::VectorXd& zeta, const Eigen::VectorXd& mu) const {
  if (zeta.size() != interior_count() || mu.size() != boundary_count())
    throw std::invalid_argument("coefficient block lengths do not match the prior");
  Eigen::VectorXd out(coefficient_count());
  out << zeta, mu;
  return out;
}

Eigen::VectorXd PriorModel::reconstruct(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != coefficient_count()) throw std::invalid_argument("coefficient vector has the wrong length");
  return mbip::reconstruct(spec_, spectrum_, basis_, coefficients.head(interior_count()),
                           coefficients.tail(boundary_count()));
}

Eigen::VectorXd PriorModel::interior_part(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != coefficient_count()) throw std::invalid_argument("coefficient vector has the wrong length");
  return spectrum_.eigenvectors * interior_scales().cwiseProduct(coefficients.head(interior_count()));
}

Eigen::VectorXd PriorModel::boundary_part(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != coefficient_count()) throw std::invalid_argument("coefficient vector has the wrong length");
  if (boundary_count() == 0) return Eigen::VectorXd::Zero(n_);
  return lifts_ * coefficients.tail(boundary_count());
}

PriorSample PriorModel::sample(Rng& rng) const { return sample_prior(spec_, spectrum_, basis_, rng); }

}  // namespace mbip
