#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "disco/graph.hpp"
#include "disco/param.hpp"
#include "disco/plant.hpp"
#include "disco/simulate.hpp"
#include "disco/train.hpp"

namespace disco {

struct MlpOptions {
  Graph comm = Graph::ring(12);
  int inputs = 2;   // per node
  int hidden = 8;   // per node, both hidden layers
  int outputs = 2;  // per node
  std::uint64_t seed = 0;
};

/// Static distributed policy
///   u = W2 tanh(W1 tanh(W0 y + b0) + b1) + b2
/// with W0 in blkSparse(S_c) and W1, W2 block diagonal. The first-layer bias
/// is held per edge: node i's effective bias is the sum of b0(i, j) over its
/// neighbors j.
class MlpPolicy {
 public:
  explicit MlpPolicy(MlpOptions opts);
  /// Parameters in the order W0, b0, W1, b1, W2, b2. Rejects shapes or
  /// values that do not conform to the sparsity structure.
  MlpPolicy(MlpOptions opts, std::vector<Parameter> params);

  const MlpOptions& options() const { return opts_; }
  int nodes() const { return opts_.comm.size(); }
  Eigen::VectorXd forward(const Eigen::VectorXd& y) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Eigen::Index trainable_count() const;

  /// Structural masks in parameter order.
  static std::vector<Eigen::MatrixXd> masks(const MlpOptions& opts);

  /// Reverse pass for one evaluation: accumulates parameter gradients of
  /// adj_u^T u into `grads` and returns d(adj_u^T u)/dy.
  Eigen::VectorXd backward(const Eigen::VectorXd& y, const Eigen::VectorXd& adj_u,
                           std::vector<Eigen::MatrixXd>& grads) const;

 private:
  MlpOptions opts_;
  std::vector<Parameter> params_;
};

Eigen::VectorXd mlp_baseline_forward(const MlpPolicy& policy, const Eigen::VectorXd& y);

/// Plant in feedback with an MLP policy. There is no controller state and
/// no closed-loop energy.
class MlpClosedLoop {
 public:
  MlpClosedLoop(PHNetwork plant, MlpPolicy policy);

  const PHNetwork& plant() const { return plant_; }
  const MlpPolicy& policy() const { return policy_; }
  MlpPolicy& policy() { return policy_; }
  int dim() const { return plant_.state_dim(); }

  Eigen::VectorXd input(const Eigen::VectorXd& x) const;
  Eigen::VectorXd vector_field(const Eigen::VectorXd& x) const;

 private:
  PHNetwork plant_;
  MlpPolicy policy_;
};

Trajectory integrate(const MlpClosedLoop& cl, const Eigen::VectorXd& x0, int steps, double h, Integrator method);

/// Lx + alpha_ca Lca (no weight schedule, so Rw = 0).
LossBreakdown mlp_total_loss(const Trajectory& traj, const PHNetwork& plant, const LossConfig& cfg);

GradientReport mlp_backprop(const MlpClosedLoop& cl, const Eigen::VectorXd& x0, const LossConfig& cfg);
GradientReport mlp_fd_gradient(const MlpClosedLoop& cl, const Eigen::VectorXd& x0, const LossConfig& cfg,
                               double step = 1e-5);

struct MlpTrainResult {
  MlpPolicy policy;
  std::vector<LossBreakdown> history;
  std::optional<int> diverged_epoch;
};

MlpTrainResult mlp_train(const MlpClosedLoop& cl, const Eigen::VectorXd& x0, const LossConfig& cfg, int epochs,
                         const AdamOptions& adam);

}  // namespace disco
