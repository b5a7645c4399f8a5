#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/energy.hpp"
#include "disco/graph.hpp"
#include "disco/param.hpp"

namespace disco {

struct ControllerOptions {
  Graph comm = Graph::ring(12);
  std::vector<int> xi_dims = std::vector<int>(12, 4);
  std::vector<int> y_dims = std::vector<int>(12, 2);
  /// Structural radii: J, R_c, K live in blkSparse(S_c^{L_y}); the first
  /// energy layer reads the L_xi-hop neighborhood.
  int output_radius = 1;
  int energy_radius = 0;
  /// Radii the deployment allows. When set, the structural radii are checked
  /// against them at construction.
  std::optional<int> allowed_output_radius, allowed_comm_radius;

  EnergySpec energy = EnergySpec::logcosh_single(4);
  int layers = 100;
  bool time_invariant = false;
  /// Allow nonzero node-local blocks in J. Off reproduces the benchmark
  /// parameter counts, where J only couples distinct neighbors.
  bool j_diagonal_blocks = false;
  bool rc_trainable = false;
  /// Fixed damping R_c = scale * blkdiag(I_d, 0) per node, d = rc_damped.
  double rc_scale = 12.0;
  int rc_damped = 2;
  /// Per-node initial controller state; empty means (3, 0, ..., 0).
  std::vector<Eigen::VectorXd> xi_initial;
  std::uint64_t seed = 0;
};

/// Distributed port-Hamiltonian controller
///   xi_dot = (J - R_c) dPhi/dxi + K y,   u = -K^T dPhi/dxi,
/// with J = A - A^T and a layer schedule theta_k for the energy Phi.
class Controller {
 public:
  /// Gaussian initialization (std 1/sqrt(fan_in)) with every mask applied.
  explicit Controller(ControllerOptions opts);

  const ControllerOptions& options() const { return opts_; }
  int nodes() const { return opts_.comm.size(); }
  int state_dim() const { return xi_offsets_.back(); }
  int measurement_dim() const { return y_offsets_.back(); }
  int xi_offset(int i) const { return xi_offsets_[i]; }
  int schedule_length() const { return static_cast<int>(theta_.size()); }

  Eigen::MatrixXd J() const;
  Eigen::MatrixXd Rc() const;
  const Eigen::MatrixXd& K() const { return k_.value; }

  /// blkSparse(S_c^{L_y}) over (xi, xi) and (xi, y) blocks.
  BlockPattern state_pattern() const;
  BlockPattern port_pattern() const;

  const EnergySpec& energy_spec() const { return opts_.energy; }
  const EnergyParams& theta(int layer) const;
  EnergyParams& theta(int layer);
  /// Layer used at integration step k: clamped to the last scheduled layer.
  int layer_for_step(int k) const;

  Eigen::VectorXd initial_state() const;

  /// Every parameter in a fixed order: A, K, Rc_factors, then for each
  /// layer its weights, biases and readout.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Eigen::Index trainable_count() const;
  /// Re-apply all masks.
  void project();

  Parameter& a_free() { return a_; }
  Parameter& k_param() { return k_; }
  Parameter& rc_factors() { return rc_; }
  const Parameter& a_free() const { return a_; }
  const Parameter& k_param() const { return k_; }
  const Parameter& rc_factors() const { return rc_; }

  /// Build with explicit parameter values (used by deserialization).
  Controller(ControllerOptions opts, Parameter a, Parameter k, Parameter rc, std::vector<EnergyParams> theta);

 private:
  void init_layout();
  void check_layer(int layer) const;

  ControllerOptions opts_;
  std::vector<int> xi_offsets_, y_offsets_;
  Parameter a_, k_, rc_;
  std::optional<Eigen::MatrixXd> rc_fixed_;
  std::vector<EnergyParams> theta_;
};

/// Checks L_y <= R_y and L_y + 2 L_xi <= R_xi; throws ValidationError.
void check_radius_condition(int output_radius, int energy_radius, std::optional<int> allowed_output_radius,
                            std::optional<int> allowed_comm_radius);

/// Structural masks used by a controller with the given options.
Eigen::MatrixXd skew_generator_mask(const ControllerOptions& opts);
Eigen::MatrixXd port_mask(const ControllerOptions& opts);
EnergyParams energy_masks(const ControllerOptions& opts);

double energy_value(const Controller& c, const Eigen::VectorXd& xi, int layer);
Eigen::VectorXd energy_gradient(const Controller& c, const Eigen::VectorXd& xi, int layer);
Eigen::MatrixXd energy_hessian(const Controller& c, const Eigen::VectorXd& xi, int layer);

Eigen::VectorXd controller_dynamics(const Controller& c, const Eigen::VectorXd& xi, const Eigen::VectorXd& y, int layer);
Eigen::VectorXd controller_output(const Controller& c, const Eigen::VectorXd& xi, int layer);

/// Versioned JSON document; values are written with 17 significant digits
/// so a save/load round trip is bit-exact.
std::string controller_to_json(const Controller& c);
Controller controller_from_json(const std::string& text);
void save_controller(const Controller& c, const std::string& path);
Controller load_controller(const std::string& path);

}  // namespace disco
