#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/config.hpp"
#include "disco/diagnostics.hpp"
#include "disco/mlp.hpp"
#include "disco/simulate.hpp"

namespace disco {

/// Process exit codes of the experiment commands.
enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitDivergence = 3, kExitCertification = 4 };

/// Plant state followed by the controller's initial state.
Eigen::VectorXd closed_loop_initial_state(const ClosedLoop& cl, const Eigen::VectorXd& plant_state);

struct HorizonMetrics {
  int multiple = 1;
  /// Control cost over [0, multiple * T]; infinite if the rollout diverged.
  double lx = 0.0;
  CollisionCount collisions;
  bool diverged = false;
};

struct EvaluationReport {
  std::vector<HorizonMetrics> horizons;
  /// Lx at the largest multiple over Lx at T.
  double stability_ratio = 0.0;
  /// Dissipation with theta frozen at its last scheduled value over the
  /// largest horizon. Unset for policies without a closed-loop energy.
  std::optional<DissipationReport> dissipation;

  const HorizonMetrics& at(int multiple) const;
};

/// Rollout over the largest horizon with theta frozen after T; Lx and
/// collisions are read off every requested prefix. Multiples must be >= 1
/// and include 1.
EvaluationReport evaluate_closed_loop(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, const LossConfig& loss,
                                      const std::vector<int>& multiples, Integrator method,
                                      Trajectory* longest = nullptr);
EvaluationReport evaluate_mlp(const MlpClosedLoop& cl, const Eigen::VectorXd& x0, const LossConfig& loss,
                              const std::vector<int>& multiples, Integrator method, Trajectory* longest = nullptr);

std::string evaluation_to_json(const EvaluationReport& rep, Eigen::Index trainable_parameters);

/// Subcommands. Each writes its artifacts under cfg.output_dir, logs
/// progress to `log` and returns an ExitCode. Validation and divergence
/// errors propagate as exceptions.
int cmd_train(const ExperimentConfig& cfg, std::ostream& log);
int cmd_evaluate(const ExperimentConfig& cfg, const std::string& controller_path, int horizon_mult,
                 std::ostream& log);
int cmd_compare_mlp(const ExperimentConfig& cfg, std::ostream& log);
int cmd_early_stop(const ExperimentConfig& cfg, const std::vector<double>& fractions, std::ostream& log);
int cmd_diagnose(const ExperimentConfig& cfg, const std::string& controller_path, std::ostream& log);

}  // namespace disco
