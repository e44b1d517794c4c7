#include "mbip/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace mbip {

void PcnConfig::validate() const {
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("pCN step zeta must lie in (0, 1)");
  if (iterations < 1) throw std::invalid_argument("iteration count must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw std::invalid_argument("burn-in must lie in [0, J)");
  if (thinning < 1) throw std::invalid_argument("thinning must be at least 1");
}

double potential(const Observation& obs, const Eigen::VectorXd& g) {
  if (g.size() != obs.y.size()) throw std::invalid_argument("forward output length differs from the data");
  if (!g.allFinite()) throw ForwardError("forward output contains non-finite values", g);
  return 0.5 * (obs.y - g).squaredNorm() / obs.noise_var;
}

double acceptance_probability(double phi_current, double phi_proposed) {
  return std::min(1.0, std::exp(phi_current - phi_proposed));
}

StepResult pcn_step(const Eigen::VectorXd& state, double phi_state, double zeta, const PotentialFn& phi, Rng& rng) {
  const Eigen::VectorXd xi = standard_normal(state.size(), rng);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  Eigen::VectorXd proposal = std::sqrt(1.0 - zeta * zeta) * state + zeta * xi;

  StepResult out;
  double phi_proposal = 0.0;
  try {
    phi_proposal = phi(proposal);
    if (!std::isfinite(phi_proposal)) throw std::runtime_error("potential is not finite");
  } catch (const std::exception& e) {
    out.state = state;
    out.phi = phi_state;
    out.failed = true;
    out.failure = e.what();
    return out;
  }
  if (u < acceptance_probability(phi_state, phi_proposal)) {
    out.state = std::move(proposal);
    out.phi = phi_proposal;
    out.accepted = true;
  } else {
    out.state = state;
    out.phi = phi_state;
  }
  return out;
}

double Chain::acceptance_rate() const {
  return iterations > 0 ? static_cast<double>(acceptance_count) / static_cast<double>(iterations) : 0.0;
}

Chain run_chain(const PcnConfig& config, const Eigen::VectorXd& initial, const PotentialFn& phi) {
  config.validate();
  Rng rng(config.seed);
  Chain chain;
  chain.seed = config.seed;
  chain.iterations = config.iterations;
  chain.samples.resize(config.stored_count(), initial.size());
  chain.potentials.resize(config.iterations);

  Eigen::VectorXd state = initial;
  double phi_state = phi(state);
  if (!std::isfinite(phi_state)) throw std::runtime_error("potential at the initial state is not finite");
  Index stored = 0;
  for (Index j = 0; j < config.iterations; ++j) {
    StepResult step = pcn_step(state, phi_state, config.zeta, phi, rng);
    if (step.failed) {
      ++chain.failure_count;
      chain.last_failure = step.failure;
    }
    if (step.accepted) ++chain.acceptance_count;
    state = std::move(step.state);
    phi_state = step.phi;
    chain.potentials[j] = phi_state;
    const Index after = j + 1 - config.burn_in;
    if (after > 0 && after % config.thinning == 0 && stored < chain.samples.rows()) chain.samples.row(stored++) = state;
  }
  return chain;
}

std::vector<Chain> run_chains(const PcnConfig& config, const std::vector<Eigen::VectorXd>& initials,
                              const PotentialFn& phi) {
  std::vector<Chain> chains(initials.size());
  std::vector<std::exception_ptr> errors(initials.size());
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < initials.size(); ++c) {
    workers.emplace_back([&, c] {
      try {
        PcnConfig local = config;
        local.seed = config.seed + c;
        chains[c] = run_chain(local, initials[c], phi);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return chains;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

PosteriorSummary summarize(const std::vector<const Chain*>& chains, const NodeMap& to_nodes) {
  Index total = 0;
  for (const Chain* c : chains) total += c->samples.rows();
  if (chains.empty() || total == 0) throw std::invalid_argument("cannot summarize an empty chain");

  Eigen::MatrixXd nodes;
  Index row = 0;
  PosteriorSummary out;
  Index accepted = 0, iterations = 0;
  for (const Chain* c : chains) {
    for (Index s = 0; s < c->samples.rows(); ++s) {
      const Eigen::VectorXd v = to_nodes(c->samples.row(s).transpose());
      if (nodes.size() == 0) nodes.resize(total, v.size());
      nodes.row(row++) = v;
    }
    out.chain_acceptance.push_back(c->acceptance_rate());
    accepted += c->acceptance_count;
    iterations += c->iterations;
  }
  out.acceptance_rate = iterations > 0 ? static_cast<double>(accepted) / static_cast<double>(iterations) : 0.0;

  const Index n = nodes.cols();
  out.mean = nodes.colwise().mean().transpose();
  out.p025.resize(n);
  out.p975.resize(n);
  std::vector<double> column(static_cast<std::size_t>(total));
  for (Index i = 0; i < n; ++i) {
    for (Index s = 0; s < total; ++s) column[static_cast<std::size_t>(s)] = nodes(s, i);
    out.p025[i] = percentile(column, 2.5);
    out.p975[i] = percentile(column, 97.5);
  }
  return out;
}

PosteriorSummary summarize(const Chain& chain, const NodeMap& to_nodes) {
  return summarize(std::vector<const Chain*>{&chain}, to_nodes);
}

}  // namespace mbip
