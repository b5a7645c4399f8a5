#include "disco/plant.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

namespace disco {

namespace {

void require_block_diagonal(const BlockMatrix& m, const char* name) {
  for (int i = 0; i < m.block_rows(); ++i)
    for (int j = 0; j < m.block_cols(); ++j)
      if (i != j && (m.block(i, j).array() != 0.0).any())
        throw ValidationError(std::string(name) + " must be block diagonal");
}

Eigen::MatrixXd fd_hessian(const NodeHamiltonian& h, const Eigen::VectorXd& x) {
  constexpr double step = 1e-5;
  const Eigen::Index n = x.size();
  Eigen::MatrixXd out(n, n);
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    xp(j) = x(j) + step;
    xm(j) = x(j) - step;
    out.col(j) = (h.gradient(xp) - h.gradient(xm)) / (2.0 * step);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return 0.5 * (out + out.transpose());
}

}  // namespace

NodeHamiltonian NodeHamiltonian::quadratic(Eigen::VectorXd target, Eigen::MatrixXd weight) {
  if (weight.rows() != weight.cols() || weight.rows() != target.size())
    throw DimensionError("quadratic Hamiltonian: weight must be square and match the target");
  if ((weight - weight.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("quadratic Hamiltonian weight must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weight, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12)
    throw ValidationError("quadratic Hamiltonian weight must be positive semidefinite");

  NodeHamiltonian h;
  h.value = [target, weight](const Eigen::VectorXd& x) {
    const Eigen::VectorXd e = x - target;
    return e.dot(weight * e);
  };
  h.gradient = [target, weight](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return 2.0 * weight * (x - target);
  };
  h.hessian = [weight](const Eigen::VectorXd&) -> Eigen::MatrixXd { return 2.0 * weight; };
  h.constant_hessian = true;
  return h;
}

PHNetwork::PHNetwork(Graph dynamics_graph, std::vector<int> state_dims, std::vector<int> port_dims,
                     BlockMatrix omega, BlockMatrix dissipation, BlockMatrix coupling, BlockMatrix port,
                     std::vector<NodeHamiltonian> energies, Eigen::VectorXd target)
    : graph_(std::move(dynamics_graph)),
      state_dims_(std::move(state_dims)),
      port_dims_(std::move(port_dims)),
      omega_(std::move(omega)),
      dissipation_(std::move(dissipation)),
      coupling_(std::move(coupling)),
      port_(std::move(port)),
      energies_(std::move(energies)),
      target_(std::move(target)) {
  const auto m = static_cast<std::size_t>(graph_.size());
  if (state_dims_.size() != m || port_dims_.size() != m || energies_.size() != m)
    throw DimensionError("PHNetwork: per-node lists must have one entry per graph node");
  state_offsets_ = block_offsets(state_dims_);
  port_offsets_ = block_offsets(port_dims_);

  if (omega_.row_blocks() != state_dims_ || omega_.col_blocks() != state_dims_)
    throw DimensionError("PHNetwork: Omega blocks must be n_i x n_j");
  if (dissipation_.row_blocks() != state_dims_ || dissipation_.col_blocks() != state_dims_)
    throw DimensionError("PHNetwork: R blocks must be n_i x n_j");
  if (coupling_.row_blocks() != state_dims_ || coupling_.col_blocks() != port_dims_)
    throw DimensionError("PHNetwork: F blocks must be n_i x p_j");
  if (port_.row_blocks() != port_dims_ || port_.col_blocks() != state_dims_)
    throw DimensionError("PHNetwork: G blocks must be p_i x n_j");
  if (target_.size() != state_dim()) throw DimensionError("PHNetwork: target has wrong length");

  require_block_diagonal(omega_, "Omega");
  require_block_diagonal(dissipation_, "R");
  require_block_diagonal(port_, "G");
  if ((omega_.data() + omega_.data().transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("Omega must be skew-symmetric");
  const Eigen::MatrixXd& r = dissipation_.data();
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ValidationError("R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12) throw ValidationError("R must be positive semidefinite");
  for (int i = 0; i < nodes(); ++i)
    if ((coupling_.block(i, i).array() != 0.0).any())
      throw ValidationError("F must have zero diagonal blocks");
  if (!conforms(coupling_, pattern_from_power(graph_, 1, state_dims_, port_dims_)))
    throw ValidationError("F must lie in blkSparse(S_d)");
  for (int i = 0; i < nodes(); ++i)
    if (!energies_[i].value || !energies_[i].gradient)
      throw ValidationError("node Hamiltonian " + std::to_string(i) + " lacks a value or gradient");

  drift_ = omega_.data() + coupling_.data() * port_.data() - dissipation_.data();

  constant_hessian_ = true;
  for (const auto& e : energies_) constant_hessian_ = constant_hessian_ && e.constant_hessian && e.hessian;
  if (constant_hessian_) fixed_hessian_ = hessian(target_);
}

void PHNetwork::check_state(const Eigen::VectorXd& x) const {
  if (x.size() != state_dim())
    throw DimensionError("plant state has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(state_dim()));
}

double PHNetwork::energy(const Eigen::VectorXd& x) const {
  check_state(x);
  double v = 0.0;
  for (int i = 0; i < nodes(); ++i) v += energies_[i].value(x.segment(state_offsets_[i], state_dims_[i]));
  return v;
}

Eigen::VectorXd PHNetwork::gradient(const Eigen::VectorXd& x) const {
  check_state(x);
  Eigen::VectorXd g(state_dim());
  for (int i = 0; i < nodes(); ++i) {
    const Eigen::VectorXd gi = energies_[i].gradient(x.segment(state_offsets_[i], state_dims_[i]));
    if (gi.size() != state_dims_[i]) throw DimensionError("node gradient has wrong length");
    g.segment(state_offsets_[i], state_dims_[i]) = gi;
  }
  return g;
}

Eigen::MatrixXd PHNetwork::hessian(const Eigen::VectorXd& x) const {
  check_state(x);
  if (fixed_hessian_) return *fixed_hessian_;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(state_dim(), state_dim());
  for (int i = 0; i < nodes(); ++i) {
    const Eigen::VectorXd xi = x.segment(state_offsets_[i], state_dims_[i]);
    h.block(state_offsets_[i], state_offsets_[i], state_dims_[i], state_dims_[i]) =
        energies_[i].hessian ? energies_[i].hessian(xi) : fd_hessian(energies_[i], xi);
  }
  return h;
}

Eigen::VectorXd PHNetwork::dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (u.size() != port_dim()) throw DimensionError("plant input has wrong length");
  return drift_ * gradient(x) + port_.data().transpose() * u;
}

Eigen::VectorXd PHNetwork::output(const Eigen::VectorXd& x) const { return port_.data() * gradient(x); }

void PHNetwork::set_position_offset(int offset_within_node) {
  for (int n : state_dims_)
    if (offset_within_node < 0 || offset_within_node + 2 > n)
      throw ValidationError("position offset does not fit inside every node state");
  position_offset_ = offset_within_node;
}

Eigen::Vector2d PHNetwork::position(const Eigen::VectorXd& x, int node) const {
  if (!position_offset_) throw ValidationError("plant does not expose positions");
  return x.segment<2>(state_offsets_[node] + *position_offset_);
}

Eigen::VectorXd plant_gradient(const PHNetwork& net, const Eigen::VectorXd& x) { return net.gradient(x); }

Eigen::VectorXd plant_dynamics(const PHNetwork& net, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  return net.dynamics(x, u);
}

Eigen::VectorXd plant_output(const PHNetwork& net, const Eigen::VectorXd& x) { return net.output(x); }

bool check_power_preserving(const PHNetwork& net) {
  const BlockMatrix fg(net.state_dims(), net.state_dims(), net.coupling().data() * net.port().data());
  if (fg.rows() > 0 && (fg.data() + fg.data().transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  return conforms(fg, pattern_from_power(net.dynamics_graph(), 1, net.state_dims(), net.state_dims()));
}

RobotFleetParams RobotFleetParams::defaults(int nodes) {
  RobotFleetParams p;
  p.nodes = nodes;
  p.masses.assign(nodes, 1.0);
  p.springs.assign(nodes, 1.0);
  p.dampings.assign(nodes, 0.2);
  constexpr double radius = 2.0;
  for (int i = 0; i < nodes; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / nodes;
    const Eigen::Vector2d start(radius * std::cos(angle), radius * std::sin(angle));
    p.initials.push_back(start);
    p.targets.push_back(-start);
  }
  return p;
}

RobotFleet robot_benchmark(const RobotFleetParams& params) {
  const int m = params.nodes;
  if (m < 2) throw ValidationError("fleet needs at least two robots", "plant.M");
  auto check_len = [m](std::size_t n, const char* field) {
    if (static_cast<int>(n) != m) throw ValidationError("expected " + std::to_string(m) + " entries", field);
  };
  check_len(params.masses.size(), "plant.masses");
  check_len(params.springs.size(), "plant.springs");
  check_len(params.dampings.size(), "plant.dampings");
  check_len(params.targets.size(), "plant.targets");
  check_len(params.initials.size(), "plant.initials");

  const std::vector<int> n(m, 4), p(m, 2);
  std::vector<Eigen::MatrixXd> omega, diss, port;
  std::vector<NodeHamiltonian> energies;
  Eigen::VectorXd target = Eigen::VectorXd::Zero(4 * m);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4 * m);

  for (int i = 0; i < m; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    if (!(params.masses[i] > 0.0)) throw ValidationError("mass must be positive", "plant.masses" + idx);
    if (!(params.springs[i] >= 0.0)) throw ValidationError("spring must be non-negative", "plant.springs" + idx);
    if (!(params.dampings[i] >= 0.0)) throw ValidationError("damping must be non-negative", "plant.dampings" + idx);

    Eigen::MatrixXd om = Eigen::MatrixXd::Zero(4, 4);
    om.block(0, 2, 2, 2) = -Eigen::Matrix2d::Identity();
    om.block(2, 0, 2, 2) = Eigen::Matrix2d::Identity();
    omega.push_back(om);

    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(4, 4);
    r.block(0, 0, 2, 2) = params.dampings[i] * Eigen::Matrix2d::Identity();
    diss.push_back(r);

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 4);
    g.block(0, 0, 2, 2) = Eigen::Matrix2d::Identity();
    port.push_back(g);

    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(4);
    xbar.segment<2>(2) = params.targets[i];
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(4, 4);
    u.block(0, 0, 2, 2) = Eigen::Matrix2d::Identity() / (2.0 * params.masses[i]);
    u.block(2, 2, 2, 2) = Eigen::Matrix2d::Identity() * (params.springs[i] / 2.0);
    energies.push_back(NodeHamiltonian::quadratic(xbar, u));

    target.segment<4>(4 * i) = xbar;
    x0.segment<2>(4 * i + 2) = params.initials[i];
  }

  PHNetwork plant(Graph::isolated(m), n, p, block_diagonal(omega), block_diagonal(diss), BlockMatrix(n, p),
                  block_diagonal(port), std::move(energies), target);
  plant.set_position_offset(2);
  return {std::move(plant), x0};
}

}  // namespace disco
