#include "mbip/ghost_operator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mbip {

Eigen::VectorXd ExtrapolationMatrix::apply(const Eigen::VectorXd& u) const {
  if (u.size() != cols) throw std::invalid_argument("extrapolation input has the wrong length");
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    out[static_cast<Index>(r)] = row.boundary_weight * u[row.boundary_col] + row.companion_weight * u[row.companion_col];
  }
  return out;
}

Eigen::MatrixXd ExtrapolationMatrix::to_dense() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    g(static_cast<Index>(r), rows[r].boundary_col) += rows[r].boundary_weight;
    g(static_cast<Index>(r), rows[r].companion_col) += rows[r].companion_weight;
  }
  return g;
}

Index ExtrapolationMatrix::nonzeros() const { return 2 * static_cast<Index>(rows.size()); }

ExtrapolationMatrix build_extrapolation(const PointCloud& cloud, const GhostSet& ghosts) {
  if (ghosts.chains.size() != cloud.boundary_idx.size())
    throw std::invalid_argument("ghost set was not built from this cloud (boundary count differs)");
  ExtrapolationMatrix g;
  g.cols = cloud.size();
  for (std::size_t c = 0; c < ghosts.chains.size(); ++c) {
    const GhostChain& chain = ghosts.chains[c];
    if (chain.boundary != cloud.boundary_idx[c] || chain.companion < 0 || chain.companion >= cloud.size() ||
        !cloud.component_of(chain.companion).empty())
      throw std::invalid_argument("ghost chain " + std::to_string(c) + " does not match the cloud's boundary");
    for (int k = 1; k <= ghosts.K; ++k)
      g.rows.push_back({chain.boundary, static_cast<double>(k + 1), chain.companion, -static_cast<double>(k)});
  }
  return g;
}

GraphOperator GpdmOperator::as_graph_operator() const {
  GraphOperator op;
  op.kind = OperatorKind::gpdm;
  op.matrix = L_tilde;
  op.epsilon = epsilon;
  BlockPartition block;
  block.interior_size = static_cast<Index>(interior_idx.size());
  block.boundary_size = static_cast<Index>(boundary_idx.size());
  block.permutation = permutation;
  op.block = std::move(block);
  return op;
}

GpdmAssembler::GpdmAssembler(const PointCloud& cloud, const GhostSet& ghosts, double epsilon)
    : n_(cloud.size()), epsilon_(epsilon), extrap_(build_extrapolation(cloud, ghosts)),
      interior_(cloud.interior_idx), boundary_(cloud.boundary_idx) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  Eigen::MatrixXd all(n_ + ghosts.size(), cloud.ambient_dim());
  all << cloud.points, ghosts.points;
  const Index total = all.rows();

  Eigen::MatrixXd h(total, total);
  for (Index j = 0; j < total; ++j)
    for (Index i = 0; i < total; ++i) h(i, j) = std::exp(-(all.row(i) - all.row(j)).squaredNorm() / (4.0 * epsilon));
  const Eigen::VectorXd q = h.rowwise().sum();

  hq_.resize(n_, total);
  for (Index j = 0; j < total; ++j)
    for (Index i = 0; i < n_; ++i) hq_(i, j) = h(i, j) / q[j];
}

Eigen::VectorXd GpdmAssembler::ghost_kappa(const Eigen::VectorXd& kappa) const {
  const Eigen::VectorXd theta = kappa.array().log().matrix();
  return extrap_.apply(theta).array().exp().matrix();
}

GpdmOperator GpdmAssembler::assemble(const Eigen::VectorXd& kappa) const {
  if (kappa.size() != n_) throw std::invalid_argument("kappa length differs from cloud size");
  for (Index i = 0; i < n_; ++i)
    if (!(kappa[i] > 0.0) || !std::isfinite(kappa[i]))
      throw std::invalid_argument("kappa must be positive and finite at every node");

  const Index total = hq_.cols();
  Eigen::VectorXd root(total);
  root.head(n_) = kappa.array().sqrt().matrix();
  root.tail(total - n_) = ghost_kappa(kappa).array().sqrt().matrix();

  // rows of (W - D)/eps restricted to cloud nodes
  Eigen::MatrixXd w = root.head(n_).asDiagonal() * hq_ * root.asDiagonal();
  const Eigen::VectorXd row_sum = w.rowwise().sum();

  GpdmOperator op;
  op.epsilon = epsilon_;
  op.L_tilde = w.leftCols(n_);
  op.L_tilde.diagonal() -= row_sum;
  for (std::size_t r = 0; r < extrap_.rows.size(); ++r) {
    const auto& row = extrap_.rows[r];
    const auto ghost_col = w.col(n_ + static_cast<Index>(r));
    op.L_tilde.col(row.boundary_col) += row.boundary_weight * ghost_col;
    op.L_tilde.col(row.companion_col) += row.companion_weight * ghost_col;
  }
  op.L_tilde *= gpdm_sign / epsilon_;

  op.interior_idx = interior_;
  op.boundary_idx = boundary_;
  op.permutation = interior_;
  op.permutation.insert(op.permutation.end(), boundary_.begin(), boundary_.end());
  const Index ni = static_cast<Index>(interior_.size()), nb = static_cast<Index>(boundary_.size());
  op.interior_block.resize(ni, ni);
  op.interior_to_boundary.resize(ni, nb);
  for (Index j = 0; j < ni; ++j)
    for (Index i = 0; i < ni; ++i) op.interior_block(i, j) = op.L_tilde(interior_[i], interior_[j]);
  for (Index j = 0; j < nb; ++j)
    for (Index i = 0; i < ni; ++i) op.interior_to_boundary(i, j) = op.L_tilde(interior_[i], boundary_[j]);
  return op;
}

GpdmOperator gpdm_operator(const PointCloud& cloud, const GhostSet& ghosts,
                           const Eigen::VectorXd& kappa_at_cloud, double epsilon) {
  return GpdmAssembler(cloud, ghosts, epsilon).assemble(kappa_at_cloud);
}

DirichletSolver::DirichletSolver(const GpdmOperator& op)
    : interior_to_boundary_(op.interior_to_boundary), interior_block_(op.interior_block),
      interior_(op.interior_idx), boundary_(op.boundary_idx), lu_(op.interior_block) {
  const double rcond = lu_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition_ <= max_condition)) {
    std::ostringstream msg;
    msg << "interior block is singular or near-singular (condition estimate " << condition_
        << " exceeds " << max_condition << ")";
    throw SolverError(msg.str());
  }
}

Eigen::VectorXd DirichletSolver::solve(const Eigen::VectorXd& f_interior, const Eigen::VectorXd& h_boundary) const {
  const Index ni = static_cast<Index>(interior_.size()), nb = static_cast<Index>(boundary_.size());
  if (f_interior.size() != ni) throw std::invalid_argument("interior load has the wrong length");
  if (h_boundary.size() != nb) throw std::invalid_argument("boundary data has the wrong length");

  const Eigen::VectorXd rhs = f_interior - interior_to_boundary_ * h_boundary;
  const Eigen::VectorXd ui = lu_.solve(rhs);
  const double residual = (interior_block_ * ui - rhs).norm();
  const double scale = interior_block_.norm() * ui.norm() + rhs.norm();
  if (!std::isfinite(residual) || residual > max_residual * std::max(scale, 1e-300)) {
    std::ostringstream msg;
    msg << "Dirichlet solve residual " << residual << " exceeds tolerance (relative scale " << scale << ")";
    throw SolverError(msg.str());
  }

  Eigen::VectorXd u(ni + nb);
  for (Index i = 0; i < ni; ++i) u[interior_[i]] = ui[i];
  for (Index b = 0; b < nb; ++b) u[boundary_[b]] = h_boundary[b];
  return u;
}

Eigen::VectorXd solve_dirichlet_elliptic(const GpdmOperator& op, const Eigen::VectorXd& f_interior,
                                         const Eigen::VectorXd& h_boundary) {
  return DirichletSolver(op).solve(f_interior, h_boundary);
}

Eigen::VectorXd solve_harmonic(const PointCloud& cloud, const GhostSet& ghosts, double epsilon,
                               const Eigen::VectorXd& boundary_values) {
  const GpdmOperator op = gpdm_operator(cloud, ghosts, Eigen::VectorXd::Ones(cloud.size()), epsilon);
  return solve_dirichlet_elliptic(op, Eigen::VectorXd::Zero(static_cast<Index>(cloud.interior_idx.size())),
                                  boundary_values);
}

void verify_sign_convention() {
  constexpr Index n = 60;
  const PointCloud cloud = generate_flat_interval(n);
  const GhostSet ghosts = construct_ghost_points(cloud, 5);
  const double h = 1.0 / static_cast<double>(n - 1);
  const GpdmOperator op = gpdm_operator(cloud, ghosts, Eigen::VectorXd::Ones(n), 0.25 * h * h * 4.0);
  Eigen::VectorXd f(static_cast<Index>(cloud.interior_idx.size()));
  for (std::size_t i = 0; i < cloud.interior_idx.size(); ++i) {
    const double x = cloud.intrinsic(cloud.interior_idx[i], 0);
    f[static_cast<Index>(i)] = std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * x);
  }
  const Eigen::VectorXd u = solve_dirichlet_elliptic(op, f, Eigen::VectorXd::Zero(2));
  double err = 0.0;
  for (Index i = 0; i < n; ++i) err = std::max(err, std::abs(u[i] - std::sin(std::numbers::pi * cloud.intrinsic(i, 0))));
  if (err > 0.05)
    throw std::logic_error("GPDM sign convention self-test failed: max error " + std::to_string(err) +
                           " against the -u'' = f oracle");
}

}  // namespace mbip
