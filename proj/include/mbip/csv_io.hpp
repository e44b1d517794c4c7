#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbip/geometry.hpp"
#include "mbip/graph_ops.hpp"
#include "mbip/inference.hpp"
#include "mbip/prior.hpp"

namespace mbip::io {

namespace fs = std::filesystem;

/// idx, x1..xD, a1..ad, is_boundary, component
void write_cloud(const fs::path& path, const PointCloud& cloud);
/// b_idx, k, companion_idx, x1..xD
void write_ghosts(const fs::path& path, const GhostSet& ghosts);
/// log_epsilon, log_T, slope
void write_calibration(const fs::path& path, const EpsilonCalibration& calibration);
/// Dense row-major CSV plus a JSON header {kind, N, B, epsilon, permutation}.
void write_operator(const fs::path& csv_path, const fs::path& json_path, const GraphOperator& op);
/// n, lambda, v_1..v_N (one eigenpair per row)
void write_spectrum(const fs::path& path, const SpectralDecomposition& spectrum);
/// seed, zeta_1.., mu_1.., theta_1..theta_N
void write_prior_samples(const fs::path& path, const std::vector<std::uint64_t>& seeds,
                         const std::vector<PriorSample>& samples);
/// idx, sample_0, sample_1, ...
void write_node_columns(const fs::path& path, const std::vector<Eigen::VectorXd>& columns, const std::string& prefix);
/// obs_idx, y
void write_observations(const fs::path& path, const std::vector<Index>& obs_idx, const Eigen::VectorXd& y);
/// idx, <name>
void write_node_function(const fs::path& path, const Eigen::VectorXd& values, const std::string& name = "u");
/// sample, c_0, ..., c_{P-1}
void write_chain(const fs::path& path, const Chain& chain);
/// iteration, phi
void write_potentials(const fs::path& path, const Chain& chain);
/// idx, mean, p025, p975
void write_summary(const fs::path& path, const PosteriorSummary& summary);

/// Reads the sample rows written by write_chain.
Eigen::MatrixXd read_chain(const fs::path& path);
/// Reads a two-column node function (idx, value); indices must be 0..n-1 in order.
Eigen::VectorXd read_node_function(const fs::path& path);

/// Formats doubles with round-trip precision.
std::string format(double v);

}  // namespace mbip::io
