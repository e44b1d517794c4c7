#include "mbip/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mbip::io {

std::string format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& cell, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": malformed number '" + cell + "'");
  return v;
}

std::vector<std::vector<double>> read_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(parse_double(cell, path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_cloud(const fs::path& path, const PointCloud& cloud) {
  auto out = open(path);
  out << "idx";
  for (Index j = 0; j < cloud.ambient_dim(); ++j) out << ",x" << j + 1;
  for (Index j = 0; j < cloud.intrinsic.cols(); ++j) out << ",a" << j + 1;
  out << ",is_boundary,component\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    out << i;
    for (Index j = 0; j < cloud.ambient_dim(); ++j) out << ',' << format(cloud.points(i, j));
    for (Index j = 0; j < cloud.intrinsic.cols(); ++j) out << ',' << format(cloud.intrinsic(i, j));
    const std::string comp = cloud.component_of(i);
    out << ',' << (comp.empty() ? 0 : 1) << ',' << comp << '\n';
  }
}

void write_ghosts(const fs::path& path, const GhostSet& ghosts) {
  auto out = open(path);
  out << "b_idx,k,companion_idx";
  for (Index j = 0; j < ghosts.points.cols(); ++j) out << ",x" << j + 1;
  out << '\n';
  Index row = 0;
  for (const auto& chain : ghosts.chains) {
    for (int k = 1; k <= ghosts.K; ++k, ++row) {
      out << chain.boundary << ',' << k << ',' << chain.companion;
      for (Index j = 0; j < ghosts.points.cols(); ++j) out << ',' << format(ghosts.points(row, j));
      out << '\n';
    }
  }
}

void write_calibration(const fs::path& path, const EpsilonCalibration& c) {
  auto out = open(path);
  out << "log_epsilon,log_T,slope\n";
  for (std::size_t i = 0; i < c.log_epsilon.size(); ++i)
    out << format(c.log_epsilon[i]) << ',' << format(c.log_T[i]) << ',' << format(c.slopes[i]) << '\n';
}

void write_operator(const fs::path& csv_path, const fs::path& json_path, const GraphOperator& op) {
  {
    auto out = open(csv_path);
    for (Index i = 0; i < op.matrix.rows(); ++i) {
      for (Index j = 0; j < op.matrix.cols(); ++j) out << (j ? "," : "") << format(op.matrix(i, j));
      out << '\n';
    }
  }
  nlohmann::json header = {{"kind", to_string(op.kind)},
                           {"N", op.matrix.rows()},
                           {"B", op.block ? op.block->boundary_size : 0},
                           {"epsilon", op.epsilon},
                           {"matrix", csv_path.filename().string()}};
  if (op.block) header["permutation"] = op.block->permutation;
  auto out = open(json_path);
  out << header.dump(2) << '\n';
}

void write_spectrum(const fs::path& path, const SpectralDecomposition& spectrum) {
  auto out = open(path);
  out << "n,lambda";
  for (Index i = 0; i < spectrum.eigenvectors.rows(); ++i) out << ",v_" << i + 1;
  out << '\n';
  for (Index n = 0; n < spectrum.count(); ++n) {
    out << n + 1 << ',' << format(spectrum.eigenvalues[n]);
    for (Index i = 0; i < spectrum.eigenvectors.rows(); ++i) out << ',' << format(spectrum.eigenvectors(i, n));
    out << '\n';
  }
}

void write_prior_samples(const fs::path& path, const std::vector<std::uint64_t>& seeds,
                         const std::vector<PriorSample>& samples) {
  if (seeds.size() != samples.size()) throw std::invalid_argument("one seed per prior sample expected");
  auto out = open(path);
  out << "seed";
  if (!samples.empty()) {
    for (Index k = 0; k < samples.front().zeta.size(); ++k) out << ",zeta_" << k + 1;
    for (Index k = 0; k < samples.front().mu.size(); ++k) out << ",mu_" << k + 1;
    for (Index k = 0; k < samples.front().theta_N.size(); ++k) out << ",theta_" << k + 1;
  }
  out << '\n';
  for (std::size_t r = 0; r < samples.size(); ++r) {
    out << seeds[r];
    for (const Eigen::VectorXd* v : {&samples[r].zeta, &samples[r].mu, &samples[r].theta_N})
      for (Index k = 0; k < v->size(); ++k) out << ',' << format((*v)[k]);
    out << '\n';
  }
}

void write_node_columns(const fs::path& path, const std::vector<Eigen::VectorXd>& columns, const std::string& prefix) {
  auto out = open(path);
  out << "idx";
  for (std::size_t c = 0; c < columns.size(); ++c) out << ',' << prefix << c;
  out << '\n';
  const Index n = columns.empty() ? 0 : columns.front().size();
  for (Index i = 0; i < n; ++i) {
    out << i;
    for (const auto& col : columns) out << ',' << format(col[i]);
    out << '\n';
  }
}

void write_observations(const fs::path& path, const std::vector<Index>& obs_idx, const Eigen::VectorXd& y) {
  auto out = open(path);
  out << "obs_idx,y\n";
  for (std::size_t m = 0; m < obs_idx.size(); ++m) out << obs_idx[m] << ',' << format(y[static_cast<Index>(m)]) << '\n';
}

void write_node_function(const fs::path& path, const Eigen::VectorXd& values, const std::string& name) {
  auto out = open(path);
  out << "idx," << name << '\n';
  for (Index i = 0; i < values.size(); ++i) out << i << ',' << format(values[i]) << '\n';
}

void write_chain(const fs::path& path, const Chain& chain) {
  auto out = open(path);
  out << "sample";
  for (Index p = 0; p < chain.samples.cols(); ++p) out << ",c" << p;
  out << '\n';
  for (Index s = 0; s < chain.samples.rows(); ++s) {
    out << s;
    for (Index p = 0; p < chain.samples.cols(); ++p) out << ',' << format(chain.samples(s, p));
    out << '\n';
  }
}

void write_potentials(const fs::path& path, const Chain& chain) {
  auto out = open(path);
  out << "iteration,phi\n";
  for (Index j = 0; j < chain.potentials.size(); ++j) out << j + 1 << ',' << format(chain.potentials[j]) << '\n';
}

void write_summary(const fs::path& path, const PosteriorSummary& s) {
  auto out = open(path);
  out << "idx,mean,p025,p975\n";
  for (Index i = 0; i < s.mean.size(); ++i)
    out << i << ',' << format(s.mean[i]) << ',' << format(s.p025[i]) << ',' << format(s.p975[i]) << '\n';
}

Eigen::MatrixXd read_chain(const fs::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty() || rows.front().size() < 2) throw std::runtime_error(path.string() + ": chain has no samples");
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size() - 1));
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (std::size_t p = 1; p < rows[s].size(); ++p) out(static_cast<Index>(s), static_cast<Index>(p - 1)) = rows[s][p];
  return out;
}

Eigen::VectorXd read_node_function(const fs::path& path) {
  const auto rows = read_rows(path);
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 2 || rows[i][0] != static_cast<double>(i))
      throw std::runtime_error(path.string() + ": expected rows 'idx,value' with idx = 0, 1, ...");
    out[static_cast<Index>(i)] = rows[i][1];
  }
  return out;
}

}  // namespace mbip::io
