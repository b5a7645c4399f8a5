#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "disco/block_matrix.hpp"
#include "disco/graph.hpp"

namespace disco {

/// Local energy V_i of one subsystem. The Hessian evaluator may be left
/// empty, in which case central differences of the gradient are used.
struct NodeHamiltonian {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
  bool constant_hessian = false;

  /// V(x) = (x - target)^T U (x - target) with U symmetric PSD.
  static NodeHamiltonian quadratic(Eigen::VectorXd target, Eigen::MatrixXd weight);
};

/// Networked port-Hamiltonian plant
///   xdot = (Omega - R) dV/dx + F y + G^T u,   y = G dV/dx,
/// with block-diagonal Omega, R, G and an inter-node coupling F.
class PHNetwork {
 public:
  PHNetwork(Graph dynamics_graph, std::vector<int> state_dims, std::vector<int> port_dims, BlockMatrix omega,
            BlockMatrix dissipation, BlockMatrix coupling, BlockMatrix port,
            std::vector<NodeHamiltonian> energies, Eigen::VectorXd target);

  int nodes() const { return static_cast<int>(state_dims_.size()); }
  int state_dim() const { return state_offsets_.back(); }
  int port_dim() const { return port_offsets_.back(); }
  const std::vector<int>& state_dims() const { return state_dims_; }
  const std::vector<int>& port_dims() const { return port_dims_; }
  int state_offset(int i) const { return state_offsets_[i]; }
  int port_offset(int i) const { return port_offsets_[i]; }

  const Graph& dynamics_graph() const { return graph_; }
  const BlockMatrix& omega() const { return omega_; }
  const BlockMatrix& dissipation() const { return dissipation_; }
  const BlockMatrix& coupling() const { return coupling_; }
  const BlockMatrix& port() const { return port_; }
  /// Omega + F G - R, the matrix multiplying dV/dx.
  const Eigen::MatrixXd& drift_matrix() const { return drift_; }
  /// Reference state used by the tracking cost (the minimizer of V for
  /// quadratic energies).
  const Eigen::VectorXd& target() const { return target_; }

  double energy(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
  /// True when every node Hessian is state independent (quadratic energies).
  bool constant_hessian() const { return constant_hessian_; }

  Eigen::VectorXd dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::VectorXd output(const Eigen::VectorXd& x) const;

  /// Planar position coordinates inside each node state, when the plant
  /// models vehicles. Needed by collision losses and counters.
  void set_position_offset(int offset_within_node);
  std::optional<int> position_offset() const { return position_offset_; }
  Eigen::Vector2d position(const Eigen::VectorXd& x, int node) const;

 private:
  void check_state(const Eigen::VectorXd& x) const;

  Graph graph_;
  std::vector<int> state_dims_, port_dims_;
  std::vector<int> state_offsets_, port_offsets_;
  BlockMatrix omega_, dissipation_, coupling_, port_;
  std::vector<NodeHamiltonian> energies_;
  Eigen::VectorXd target_;
  Eigen::MatrixXd drift_;
  bool constant_hessian_ = false;
  std::optional<Eigen::MatrixXd> fixed_hessian_;
  std::optional<int> position_offset_;
};

Eigen::VectorXd plant_gradient(const PHNetwork& net, const Eigen::VectorXd& x);
Eigen::VectorXd plant_dynamics(const PHNetwork& net, const Eigen::VectorXd& x, const Eigen::VectorXd& u);
Eigen::VectorXd plant_output(const PHNetwork& net, const Eigen::VectorXd& x);

/// FG skew-symmetric (to 1e-12 in max norm) and inside blkSparse(S_d).
bool check_power_preserving(const PHNetwork& net);

/// Point-mass vehicle fleet parameters. Per-node state is (p_x, p_y, q_x, q_y).
struct RobotFleetParams {
  int nodes = 12;
  std::vector<double> masses, springs, dampings;
  std::vector<Eigen::Vector2d> targets, initials;

  /// m = k = 1, b = 0.2, starts evenly on a radius-2 circle, targets antipodal.
  static RobotFleetParams defaults(int nodes = 12);
};

struct RobotFleet {
  PHNetwork plant;
  Eigen::VectorXd initial_state;
};

RobotFleet robot_benchmark(const RobotFleetParams& params);

}  // namespace disco
