#include "mbip/forward.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/QR>

namespace mbip {

void Observation::validate(Index n) const {
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) throw std::invalid_argument("noise variance must be positive");
  if (y.size() != static_cast<Index>(obs_idx.size()))
    throw std::invalid_argument("observation count differs from the number of observed nodes");
  for (Index i : obs_idx)
    if (i < 0 || i >= n) throw std::invalid_argument("observed node index " + std::to_string(i) + " out of range");
}

std::vector<Index> all_nodes(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& u, const std::vector<Index>& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = u[idx[i]];
  return out;
}

void check_indices(const std::vector<Index>& idx, Index n) {
  for (Index i : idx)
    if (i < 0 || i >= n) throw std::invalid_argument("observed node index " + std::to_string(i) + " out of range");
}

}  // namespace

EllipticForwardModel::EllipticForwardModel(const PointCloud& cloud, const GhostSet& ghosts, double epsilon,
                                           Eigen::VectorXd f_N, Eigen::VectorXd h_B, std::vector<Index> obs_idx)
    : n_(cloud.size()), assembler_(cloud, ghosts, epsilon), f_(std::move(f_N)), h_(std::move(h_B)),
      obs_idx_(std::move(obs_idx)) {
  if (f_.size() != n_) throw std::invalid_argument("load must have one value per node");
  if (h_.size() != cloud.boundary_size()) throw std::invalid_argument("Dirichlet data must have one value per boundary node");
  check_indices(obs_idx_, n_);
  f_interior_ = gather(f_, cloud.interior_idx);
}

Eigen::VectorXd EllipticForwardModel::solve_kappa(const Eigen::VectorXd& kappa_N) const {
  return DirichletSolver(assembler_.assemble(kappa_N)).solve(f_interior_, h_);
}

Eigen::VectorXd EllipticForwardModel::solve(const Eigen::VectorXd& theta_N) const {
  if (theta_N.size() != n_) throw std::invalid_argument("theta must have one value per node");
  if (!theta_N.allFinite()) throw ForwardError("theta contains non-finite values", theta_N);
  try {
    return solve_kappa(theta_N.array().exp().matrix());
  } catch (const std::exception& e) {
    throw ForwardError(std::string("elliptic forward solve failed: ") + e.what(), theta_N);
  }
}

Eigen::VectorXd EllipticForwardModel::observe(const Eigen::VectorXd& theta_N) const {
  return gather(solve(theta_N), obs_idx_);
}

Eigen::VectorXd heat_propagate(const SpectralDecomposition& spectrum, const Eigen::VectorXd& v, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("propagation time must be nonnegative");
  if (v.size() != spectrum.eigenvectors.rows()) throw std::invalid_argument("vector length differs from the spectrum");
  const Eigen::VectorXd proj = spectrum.eigenvectors.transpose() * v;
  const Eigen::VectorXd decay = (-t * spectrum.eigenvalues.cwiseMax(0.0)).array().exp().matrix();
  return spectrum.eigenvectors * proj.cwiseProduct(decay);
}

HeatForwardModel::HeatForwardModel(const PriorModel& prior, double t_star, std::vector<Index> obs_idx)
    : prior_(&prior), t_star_(t_star), obs_idx_(std::move(obs_idx)) {
  if (!(t_star >= 0.0) || !std::isfinite(t_star)) throw std::invalid_argument("t_star must be nonnegative and finite");
  check_indices(obs_idx_, prior.node_count());
  const Eigen::VectorXd& lam = prior.spectrum().eigenvalues;
  decay_ = (-t_star * lam.cwiseMax(0.0)).array().exp().matrix().cwiseProduct(prior.interior_scales());
}

Eigen::VectorXd HeatForwardModel::solve(const Eigen::VectorXd& coefficients) const {
  const PriorModel& p = *prior_;
  if (coefficients.size() != p.coefficient_count())
    throw std::invalid_argument("coefficient vector has " + std::to_string(coefficients.size()) + " entries, expected " +
                                std::to_string(p.coefficient_count()));
  Eigen::VectorXd u = p.spectrum().eigenvectors * decay_.cwiseProduct(coefficients.head(p.interior_count()));
  if (p.boundary_count() > 0) u += p.lift_matrix() * coefficients.tail(p.boundary_count());
  return u;
}

Eigen::VectorXd HeatForwardModel::solve(const PriorSample& sample) const {
  return solve(prior_->stack(sample.zeta, sample.mu));
}

Eigen::VectorXd HeatForwardModel::observe(const Eigen::VectorXd& coefficients) const {
  return gather(solve(coefficients), obs_idx_);
}

Eigen::VectorXd RegressionFit::coefficients() const {
  Eigen::VectorXd out(zeta.size() + mu.size());
  out << zeta, mu;
  return out;
}

RegressionFit heat_regress_coefficients(const Eigen::VectorXd& u0, const PriorModel& prior) {
  const Index n = prior.node_count(), m = prior.interior_count(), l = prior.boundary_count();
  if (u0.size() != n) throw std::invalid_argument("initial condition must have one value per node");
  Eigen::MatrixXd design(n, m + l);
  design.leftCols(m) = prior.spectrum().eigenvectors;
  if (l > 0) design.rightCols(l) = prior.lift_matrix();

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < m + l) {
    std::ostringstream msg;
    msg << "regression design matrix is rank deficient (rank " << qr.rank() << " of " << m + l
        << "); collinear columns:";
    for (Index k = qr.rank(); k < m + l; ++k) {
      const Index col = qr.colsPermutation().indices()[k];
      msg << ' ' << (col < m ? "phi_" + std::to_string(col + 1) : "psi_" + std::to_string(col - m + 1));
    }
    throw std::runtime_error(msg.str());
  }

  RegressionFit fit;
  fit.column_coefficients = qr.solve(u0);
  fit.zeta = fit.column_coefficients.head(m).cwiseQuotient(prior.interior_scales());
  fit.mu = fit.column_coefficients.tail(l);
  const double norm = u0.norm();
  fit.relative_residual = (design * fit.column_coefficients - u0).norm() / (norm > 0.0 ? norm : 1.0);
  return fit;
}

Observation generate_observations(const Eigen::VectorXd& u, const std::vector<Index>& obs_idx, double noise_var,
                                  Rng& rng, bool zero_noise) {
  if (!zero_noise && !(noise_var > 0.0)) throw std::invalid_argument("noise variance must be positive");
  check_indices(obs_idx, u.size());
  Observation obs;
  obs.obs_idx = obs_idx;
  obs.noise_var = noise_var;
  obs.y = gather(u, obs_idx);
  if (!zero_noise) obs.y += std::sqrt(noise_var) * standard_normal(obs.y.size(), rng);
  return obs;
}

}  // namespace mbip
