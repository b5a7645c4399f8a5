#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/controller.hpp"
#include "disco/plant.hpp"

namespace disco {

/// Plant and controller interconnected through u = -K^T dPhi/dxi, giving
///   zeta_dot = (Psi - S) dP/dzeta,   zeta = (x, xi),   P = V + Phi,
///   Psi = [[Omega + FG, -G^T K^T], [K G, J]],   S = blkdiag(R, R_c).
class ClosedLoop {
 public:
  /// Refuses plants whose interconnection FG is not power preserving and
  /// controllers whose measurement size differs from the plant output.
  ClosedLoop(PHNetwork plant, Controller controller);

  const PHNetwork& plant() const { return plant_; }
  const Controller& controller() const { return controller_; }
  /// Mutable access for training; call refresh() after changing J, K or R_c.
  Controller& controller() { return controller_; }
  void refresh();

  int dim() const { return plant_.state_dim() + controller_.state_dim(); }
  int plant_dim() const { return plant_.state_dim(); }
  int controller_dim() const { return controller_.state_dim(); }

  const Eigen::MatrixXd& psi() const { return psi_; }
  const Eigen::MatrixXd& dissipation() const { return s_; }
  /// Psi - S.
  const Eigen::MatrixXd& system_matrix() const { return m_; }

  double total_energy(const Eigen::VectorXd& zeta, int layer) const;
  Eigen::VectorXd energy_gradient(const Eigen::VectorXd& zeta, int layer) const;
  Eigen::MatrixXd energy_hessian(const Eigen::VectorXd& zeta, int layer) const;
  Eigen::VectorXd vector_field(const Eigen::VectorXd& zeta, int layer) const;
  Eigen::VectorXd input(const Eigen::VectorXd& zeta, int layer) const;
  Eigen::VectorXd output(const Eigen::VectorXd& zeta) const;

 private:
  void check(const Eigen::VectorXd& zeta) const;

  PHNetwork plant_;
  Controller controller_;
  Eigen::MatrixXd psi_, s_, m_;
};

ClosedLoop assemble(const PHNetwork& plant, const Controller& controller);

/// V(x) + Phi(xi, theta_layer).
double total_energy(const ClosedLoop& cl, const Eigen::VectorXd& zeta, int layer);

/// zeta + h (Psi - S) dP/dzeta with theta taken from the layer used at step k.
Eigen::VectorXd step_fe(const ClosedLoop& cl, const Eigen::VectorXd& zeta, int k, double h);

/// I + h (Psi - S) d2P/dzeta2 at the layer used by step k.
Eigen::MatrixXd layer_jacobian(const ClosedLoop& cl, const Eigen::VectorXd& zeta, int k, double h);

enum class Integrator { FE, RK5 };
std::string to_string(Integrator m);
Integrator integrator_from_string(const std::string& s);

/// Maps an integration step to a schedule layer.
struct LayerSchedule {
  /// Integration steps per schedule interval (finer grids keep theta
  /// piecewise constant on the original intervals).
  int substeps = 1;
  /// Last layer used; later steps hold it.
  std::optional<int> freeze_after;

  int layer(int step, int schedule_length) const;
};

struct Trajectory {
  double h = 0.0;
  int steps = 0;
  int plant_dim = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;   // steps + 1 entries
  std::vector<Eigen::VectorXd> inputs;   // u_k for every recorded state
  std::vector<Eigen::VectorXd> outputs;  // y_k for every recorded state
  std::vector<int> layers;               // layer applied on [t_k, t_{k+1})

  double horizon() const { return h * steps; }
  Eigen::VectorXd plant_state(int k) const { return states[k].head(plant_dim); }
};

/// Fixed-step rollout over `steps` intervals of length h. Throws
/// DivergenceError on the first non-finite state.
Trajectory integrate(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, int steps, double h, Integrator method,
                     const LayerSchedule& schedule = {});

/// CSV with one row per (step, node). Robot nodes (4 states, 2 inputs) use
/// the columns t,node,px,py,qx,qy,ux,uy,xi1..; other plants use x1.., u1...
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const PHNetwork& plant,
                          const std::vector<int>& xi_dims = {});
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const PHNetwork& plant,
                          const std::vector<int>& xi_dims = {});

/// Checks every state component is finite; throws DivergenceError.
void check_finite(const Eigen::VectorXd& v, int step);

}  // namespace disco
