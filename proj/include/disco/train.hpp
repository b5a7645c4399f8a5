#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/controller.hpp"
#include "disco/simulate.hpp"

namespace disco {

/// Training objective
///   L = Lx + alpha_ca Lca + alpha_w Rw
/// over an FE rollout of `steps` intervals of length h. Integrals use the
/// left endpoint rule, so the last state only enters through earlier terms.
struct LossConfig {
  int steps = 100;
  double h = 0.05;
  /// Q(t) = q_scale * gamma^(T - t) * I,  R(t) = r_scale * I.
  double q_scale = 1.0;
  double r_scale = 0.5;
  double gamma = 0.95;
  double safety_distance = 0.5;
  double epsilon = 1e-3;
  double alpha_ca = 100.0;
  double alpha_w = 25.0;
  /// Include biases in the weight-smoothness term.
  bool smooth_biases = false;

  double horizon() const { return steps * h; }
};

struct LossBreakdown {
  double total = 0, lx = 0, lca = 0, rw = 0;
};

double loss_control(const Trajectory& traj, const PHNetwork& plant, const LossConfig& cfg);
double loss_collision(const Trajectory& traj, const PHNetwork& plant, const LossConfig& cfg);
/// h * sum_k ||W_{k+1} - W_k||_F^2 over scheduled energy weights.
double loss_weight_smoothness(const Controller& c, const LossConfig& cfg);
LossBreakdown total_loss(const Trajectory& traj, const ClosedLoop& cl, const LossConfig& cfg);

/// FE rollout with cfg.steps and cfg.h followed by total_loss.
LossBreakdown evaluate_loss(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, const LossConfig& cfg);

/// Gradients aligned with Controller::parameters(); frozen parameters and
/// masked entries get exact zeros.
struct GradientReport {
  LossBreakdown loss;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> grads;
};

GradientReport backprop(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, const LossConfig& cfg);
/// Central differences of total_loss, one scalar parameter at a time.
GradientReport fd_gradient_oracle(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, const LossConfig& cfg,
                                  double step = 1e-5);

/// Worst |a - b| / max(|a|, |b|, floor) over all entries.
double max_relative_error(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b,
                          double floor = 1e-6);

struct AdamOptions {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  long step = 0;
  std::vector<Eigen::MatrixXd> m, v;
};

/// One Adam update with bias correction; masks are re-applied afterwards.
/// Frozen parameters are left untouched.
void adam_step(const std::vector<Parameter*>& params, const std::vector<Eigen::MatrixXd>& grads, AdamState& state,
               const AdamOptions& opts);

struct TrainOptions {
  int epochs = 300;
  AdamOptions adam;
  /// Called after every parameter update with the epoch index.
  std::function<void(int, const Controller&, const LossBreakdown&)> on_epoch;
};

struct TrainResult {
  Controller controller;
  /// Loss before each update plus one final entry for the returned controller.
  std::vector<LossBreakdown> history;
  std::optional<int> diverged_epoch;
};

/// Full-batch Adam on one initial condition. On a divergent rollout the
/// parameters from before the offending update are returned.
TrainResult train(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, const LossConfig& cfg,
                  const TrainOptions& opts);

namespace detail {
/// Q(t_k) scale factor.
double state_weight(const LossConfig& cfg, double t, double horizon);
/// Sum of pair penalties at one plant state; adds d/dx into `grad` if given.
double collision_penalty(const PHNetwork& plant, const Eigen::VectorXd& x, const LossConfig& cfg,
                         Eigen::VectorXd* grad, double grad_scale = 1.0);
}  // namespace detail

void write_loss_csv(const std::string& path, const std::vector<LossBreakdown>& history);

}  // namespace disco
