#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/controller.hpp"
#include "disco/mlp.hpp"
#include "disco/plant.hpp"
#include "disco/simulate.hpp"
#include "disco/train.hpp"

namespace disco {

inline constexpr int kConfigSchemaVersion = 1;

struct PlantSection {
  RobotFleetParams fleet = RobotFleetParams::defaults(12);
};

struct ControllerSection {
  /// "ring", "complete", "isolated" or explicit adjacency rows.
  std::string graph = "ring";
  std::vector<std::vector<int>> adjacency;
  std::string variant = "logcosh_single";
  /// Per-node widths of the energy layers. Empty picks the variant default.
  std::vector<int> widths;
  std::string activation = "logcosh";
  int xi_dim = 4;
  int output_radius = 1;
  int energy_radius = 0;
  std::optional<int> allowed_output_radius, allowed_comm_radius;
  bool time_invariant = false;
  bool j_diagonal_blocks = false;
  bool rc_trainable = false;
  double rc_scale = 12.0;
  int rc_damped = 2;
  /// Same initial state for every node; empty means (3, 0, ..., 0).
  std::vector<double> xi_initial;
  std::uint64_t seed = 0;
};

struct TrainingSection {
  int epochs = 300;
  double lr = 5e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int steps = 100;
  double h = 0.05;
  double gamma = 0.95;
  double q_scale = 1.0;
  double r_scale = 0.5;
  double alpha_ca = 100.0;
  double alpha_w = 25.0;
  double safety_distance = 0.5;
  double epsilon = 1e-3;
  bool smooth_biases = false;
  /// Baseline comparison settings.
  int mlp_epochs = 600;
  int mlp_hidden = 8;
};

struct EvaluationSection {
  std::vector<int> horizon_multiples{1, 10};
  std::string integrator = "rk5";
  double gamma = 1.0;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  PlantSection plant;
  ControllerSection controller;
  TrainingSection training;
  EvaluationSection evaluation;
  std::string output_dir = "out";
};

/// Parses and validates. Missing keys keep their defaults; unknown keys and
/// bad values raise ValidationError naming the dotted field path.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

Graph communication_graph(const ExperimentConfig& cfg);
RobotFleet make_fleet(const ExperimentConfig& cfg);
ControllerOptions controller_options(const ExperimentConfig& cfg);
MlpOptions mlp_options(const ExperimentConfig& cfg);
LossConfig training_loss(const ExperimentConfig& cfg);
/// Same objective with the evaluation discount.
LossConfig evaluation_loss(const ExperimentConfig& cfg);
AdamOptions adam_options(const ExperimentConfig& cfg);
Integrator evaluation_integrator(const ExperimentConfig& cfg);

}  // namespace disco
