#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbip/geometry.hpp"
#include "mbip/ghost_operator.hpp"
#include "mbip/prior.hpp"

namespace mbip {

/// Noisy point values y_m = u(obs_idx[m]) + eta_m with Gamma = noise_var * I.
struct Observation {
  std::vector<Index> obs_idx;
  Eigen::VectorXd y;
  double noise_var = 0.01;

  void validate(Index n) const;
};

/// Forward-map failure carrying the parameter that triggered it.
class ForwardError : public std::runtime_error {
 public:
  ForwardError(const std::string& what, Eigen::VectorXd theta)
      : std::runtime_error(what), theta_(std::move(theta)) {}
  const Eigen::VectorXd& theta() const { return theta_; }

 private:
  Eigen::VectorXd theta_;
};

std::vector<Index> all_nodes(Index n);

/// theta -> u solving -div(exp(theta) grad u) = f with u_B = h_B.
class EllipticForwardModel {
 public:
  EllipticForwardModel(const PointCloud& cloud, const GhostSet& ghosts, double epsilon,
                       Eigen::VectorXd f_N, Eigen::VectorXd h_B, std::vector<Index> obs_idx);

  Eigen::VectorXd solve(const Eigen::VectorXd& theta_N) const;
  Eigen::VectorXd observe(const Eigen::VectorXd& theta_N) const;

  /// Solve with kappa given directly (used for truth and posterior-mean runs).
  Eigen::VectorXd solve_kappa(const Eigen::VectorXd& kappa_N) const;

  Index node_count() const { return n_; }
  const std::vector<Index>& obs_idx() const { return obs_idx_; }
  const Eigen::VectorXd& load() const { return f_; }
  const Eigen::VectorXd& boundary_data() const { return h_; }
  const GpdmAssembler& assembler() const { return assembler_; }

 private:
  Index n_;
  GpdmAssembler assembler_;
  Eigen::VectorXd f_;
  Eigen::VectorXd f_interior_;
  Eigen::VectorXd h_;
  std::vector<Index> obs_idx_;
};

/// w(t) = sum_n <phi_n, v> exp(-lambda_n t) phi_n over the retained spectrum.
Eigen::VectorXd heat_propagate(const SpectralDecomposition& spectrum, const Eigen::VectorXd& v, double t);

/// Coefficients (zeta, mu) -> u(t*) = w(t*) + sum mu psi, where w starts from
/// the interior part of the prior reconstruction.
class HeatForwardModel {
 public:
  HeatForwardModel(const PriorModel& prior, double t_star, std::vector<Index> obs_idx);

  Eigen::VectorXd solve(const Eigen::VectorXd& coefficients) const;
  Eigen::VectorXd solve(const PriorSample& sample) const;
  Eigen::VectorXd observe(const Eigen::VectorXd& coefficients) const;

  double t_star() const { return t_star_; }
  const std::vector<Index>& obs_idx() const { return obs_idx_; }
  const PriorModel& prior() const { return *prior_; }

 private:
  const PriorModel* prior_;
  double t_star_;
  Eigen::VectorXd decay_;  // exp(-lambda t*) times the prior mode scale
  std::vector<Index> obs_idx_;
};

struct RegressionFit {
  /// least-squares weights on [phi_1..phi_m | psi_1..psi_L]
  Eigen::VectorXd column_coefficients;
  Eigen::VectorXd zeta;  // phi weights divided by the prior mode scales
  Eigen::VectorXd mu;
  double relative_residual = 0.0;

  Eigen::VectorXd coefficients() const;
};

/// Least-squares representation of node values in the prior's basis.
RegressionFit heat_regress_coefficients(const Eigen::VectorXd& u0, const PriorModel& prior);

Observation generate_observations(const Eigen::VectorXd& u, const std::vector<Index>& obs_idx, double noise_var,
                                  Rng& rng, bool zero_noise = false);

}  // namespace mbip
