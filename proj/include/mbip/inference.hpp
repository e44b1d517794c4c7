#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbip/forward.hpp"
#include "mbip/prior.hpp"

namespace mbip {

struct PcnConfig {
  double zeta = 0.01;
  Index iterations = 10000;
  Index burn_in = 5000;
  std::uint64_t seed = 0;
  Index thinning = 1;

  void validate() const;
  Index stored_count() const { return (iterations - burn_in) / thinning; }
};

/// Coefficients -> Phi. Must be safe to call concurrently.
using PotentialFn = std::function<double(const Eigen::VectorXd&)>;
using NodeMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// 0.5 * sum (y - g)^2 / noise_var
double potential(const Observation& obs, const Eigen::VectorXd& g);

/// min(1, exp(phi_current - phi_proposed))
double acceptance_probability(double phi_current, double phi_proposed);

struct StepResult {
  Eigen::VectorXd state;
  double phi = 0.0;
  bool accepted = false;
  bool failed = false;  // the forward map threw on the proposal
  std::string failure;
};

/// One pCN move from (state, phi_state). Always draws the proposal noise and
/// one uniform so the random stream does not depend on the outcome.
StepResult pcn_step(const Eigen::VectorXd& state, double phi_state, double zeta, const PotentialFn& phi, Rng& rng);

struct Chain {
  Eigen::MatrixXd samples;         // stored_count x P
  Eigen::VectorXd potentials;      // Phi of the state after every iteration
  Index acceptance_count = 0;
  Index iterations = 0;
  Index failure_count = 0;
  std::string last_failure;
  std::uint64_t seed = 0;

  double acceptance_rate() const;
};

Chain run_chain(const PcnConfig& config, const Eigen::VectorXd& initial, const PotentialFn& phi);

/// Runs `count` independent chains on threads; chain c uses seed config.seed + c
/// and initial state initials[c].
std::vector<Chain> run_chains(const PcnConfig& config, const std::vector<Eigen::VectorXd>& initials,
                              const PotentialFn& phi);

struct PosteriorSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd p025;
  Eigen::VectorXd p975;
  double acceptance_rate = 0.0;
  std::vector<double> chain_acceptance;
};

/// Empirical quantile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

/// Maps every stored sample to node values through `to_nodes` and
/// summarizes nodewise. Several chains are pooled.
PosteriorSummary summarize(const std::vector<const Chain*>& chains, const NodeMap& to_nodes);
PosteriorSummary summarize(const Chain& chain, const NodeMap& to_nodes);

}  // namespace mbip
