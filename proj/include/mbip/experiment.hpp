#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbip/expression.hpp"
#include "mbip/forward.hpp"
#include "mbip/geometry.hpp"
#include "mbip/graph_ops.hpp"
#include "mbip/inference.hpp"
#include "mbip/prior.hpp"

namespace mbip {

/// Configuration problem reported with the source location of the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Problem { elliptic, heat };
std::string to_string(Problem p);

struct GeometryConfig {
  Shape shape = Shape::semi_ellipse;
  Index n = 630;
  Index n1 = 0;
  Index n2 = 0;
  double alpha_max = 3.141592653589793;
};

/// Elliptic truth uses kappa and u; heat truth uses u0.
struct TruthConfig {
  std::string name;
  std::string kappa;
  std::string u;
  std::string u0;
};

struct PriorConfig {
  double tau = 0.2;
  double s = 4.0;
  Index m = 20;
  Index L = 10;  // lifts per boundary circle (2D only)
  int boundary_knn = 2;
  int interior_knn = 2;
  bool boundary_aware = true;
  Normalization normalization = Normalization::retained;
};

struct KernelSettings {
  int k_closest = 51;
  std::optional<double> epsilon;  // fixed value skips calibration
  double eps_min = 1e-6;
  double eps_max = 1e2;
  int eps_count = 41;
  int ghost_K = 10;
};

struct McmcSettings {
  PcnConfig pcn;
  int chains = 1;
  bool merge_chains = false;
  bool init_from_prior = false;
};

struct ExperimentConfig {
  std::string name;
  std::string description;
  GeometryConfig geometry;
  Problem problem = Problem::elliptic;
  TruthConfig truth;
  PriorConfig prior;
  KernelSettings kernel;
  McmcSettings mcmc;
  double noise_var = 0.01;
  std::uint64_t data_seed = 0;
  double t_star = 0.0;
  std::string output_dir;
  /// set by apply_scale
  double scale = 1.0;
  std::string scaling_rule;
};

/// Parses JSON text; errors name `origin`, the line and column, and the key path.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

std::filesystem::path preset_directory();
std::vector<std::string> list_presets();
ExperimentConfig load_preset(const std::string& name);

/// Range and consistency checks that need no computation.
void validate(const ExperimentConfig& config);
/// validate() plus compiling and evaluating the truth expressions.
void dry_run(const ExperimentConfig& config);

/// Shrinks the cloud and the chain length: 1D n -> round(n * scale),
/// 2D n1, n2 -> round(n * sqrt(scale)), J -> round(J * scale) unless
/// `iterations` is given, burn-in keeps its fraction of J.
void apply_scale(ExperimentConfig& config, double scale, std::optional<Index> iterations = std::nullopt);

std::string config_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

/// Named truth fields (e.g. "kappa1", "heat_a").
TruthConfig truth_preset(const std::string& name);

/// Everything built before sampling: geometry, prior, forward model and data.
struct ExperimentSetup {
  ExperimentConfig config;
  PointCloud cloud;
  GhostSet ghosts;
  std::optional<EpsilonCalibration> calibration;
  double epsilon = 0.0;
  SpectralDecomposition spectrum;  // every eigenpair that was computed
  std::unique_ptr<PriorModel> prior;
  std::unique_ptr<EllipticForwardModel> elliptic;
  std::unique_ptr<HeatForwardModel> heat;
  Eigen::VectorXd truth_parameter;  // kappa (elliptic) or u0 (heat) at the nodes
  Eigen::VectorXd truth_solution;   // noise-free data field
  Eigen::VectorXd truth_coefficients;  // heat only: regression fit
  double truth_fit_residual = 0.0;
  Observation observations;

  PotentialFn potential() const;
  /// Coefficients -> the inverted parameter at the nodes (kappa or u0).
  NodeMap parameter_map() const;
  /// Forward solve at a node-space parameter summary.
  Eigen::VectorXd forward_at(const Eigen::VectorXd& parameter, const Eigen::VectorXd& mean_coefficients) const;
  std::vector<Eigen::VectorXd> initial_states() const;
};

std::unique_ptr<ExperimentSetup> build_setup(const ExperimentConfig& config);

struct RunResult {
  std::unique_ptr<ExperimentSetup> setup;
  std::vector<Chain> chains;
  PosteriorSummary summary;
  Eigen::VectorXd forward_at_mean;
  double coverage = 0.0;
  double forward_relative_error = 0.0;
  std::vector<double> boundary_abs_error;  // one per boundary component, mean over its nodes
  double wall_seconds = 0.0;
};

/// Runs the chains and summarizes; writes nothing.
RunResult execute(const ExperimentConfig& config);

/// execute() plus every artifact and manifest.json under `run_dir`.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& run_dir);

/// $MBIP_OUTPUT_ROOT, or "runs" when unset.
std::filesystem::path default_output_root();

}  // namespace mbip
