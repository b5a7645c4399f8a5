#include "disco/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "disco/error.hpp"
#include "disco/integrators.hpp"

namespace disco {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ClosedLoop::ClosedLoop(PHNetwork plant, Controller controller)
    : plant_(std::move(plant)), controller_(std::move(controller)) {
  if (!check_power_preserving(plant_))
    throw ValidationError("plant interconnection F G is not power preserving; closed-loop stability would not hold");
  if (plant_.port_dim() != controller_.measurement_dim())
    throw DimensionError("plant has " + std::to_string(plant_.port_dim()) + " outputs but the controller measures " +
                         std::to_string(controller_.measurement_dim()));
  refresh();
}

void ClosedLoop::refresh() {
  const int n = plant_dim();
  const int q = controller_dim();
  const MatrixXd& g = plant_.port().data();
  const MatrixXd& k = controller_.K();
  const MatrixXd fg = plant_.coupling().data() * g;

  psi_ = MatrixXd::Zero(n + q, n + q);
  psi_.topLeftCorner(n, n) = plant_.omega().data() + fg;
  psi_.topRightCorner(n, q) = -(k * g).transpose();
  psi_.bottomLeftCorner(q, n) = k * g;
  psi_.bottomRightCorner(q, q) = controller_.J();

  s_ = MatrixXd::Zero(n + q, n + q);
  s_.topLeftCorner(n, n) = plant_.dissipation().data();
  s_.bottomRightCorner(q, q) = controller_.Rc();

  m_ = psi_ - s_;
}

void ClosedLoop::check(const VectorXd& zeta) const {
  if (zeta.size() != dim())
    throw DimensionError("closed-loop state has length " + std::to_string(zeta.size()) + ", expected " +
                         std::to_string(dim()));
}

double ClosedLoop::total_energy(const VectorXd& zeta, int layer) const {
  check(zeta);
  return plant_.energy(zeta.head(plant_dim())) + disco::energy_value(controller_, zeta.tail(controller_dim()), layer);
}

VectorXd ClosedLoop::energy_gradient(const VectorXd& zeta, int layer) const {
  check(zeta);
  VectorXd g(dim());
  g.head(plant_dim()) = plant_.gradient(zeta.head(plant_dim()));
  g.tail(controller_dim()) = disco::energy_gradient(controller_, zeta.tail(controller_dim()), layer);
  return g;
}

MatrixXd ClosedLoop::energy_hessian(const VectorXd& zeta, int layer) const {
  check(zeta);
  MatrixXd h = MatrixXd::Zero(dim(), dim());
  h.topLeftCorner(plant_dim(), plant_dim()) = plant_.hessian(zeta.head(plant_dim()));
  h.bottomRightCorner(controller_dim(), controller_dim()) =
      disco::energy_hessian(controller_, zeta.tail(controller_dim()), layer);
  return h;
}

VectorXd ClosedLoop::vector_field(const VectorXd& zeta, int layer) const {
  return m_ * energy_gradient(zeta, layer);
}

VectorXd ClosedLoop::input(const VectorXd& zeta, int layer) const {
  check(zeta);
  return controller_output(controller_, zeta.tail(controller_dim()), layer);
}

VectorXd ClosedLoop::output(const VectorXd& zeta) const {
  check(zeta);
  return plant_.output(zeta.head(plant_dim()));
}

ClosedLoop assemble(const PHNetwork& plant, const Controller& controller) { return ClosedLoop(plant, controller); }

double total_energy(const ClosedLoop& cl, const VectorXd& zeta, int layer) { return cl.total_energy(zeta, layer); }

void check_finite(const VectorXd& v, int step) {
  if (!v.allFinite()) throw DivergenceError("rollout produced a non-finite state", step);
}

VectorXd step_fe(const ClosedLoop& cl, const VectorXd& zeta, int k, double h) {
  if (h < 0) throw ValidationError("step size must be non-negative");
  const int layer = cl.controller().layer_for_step(k);
  VectorXd next = zeta + h * cl.vector_field(zeta, layer);
  check_finite(next, k + 1);
  return next;
}

MatrixXd layer_jacobian(const ClosedLoop& cl, const VectorXd& zeta, int k, double h) {
  const int layer = cl.controller().layer_for_step(k);
  MatrixXd jac = h * cl.system_matrix() * cl.energy_hessian(zeta, layer);
  jac.diagonal().array() += 1.0;
  return jac;
}

std::string to_string(Integrator m) { return m == Integrator::FE ? "fe" : "rk5"; }

Integrator integrator_from_string(const std::string& s) {
  if (s == "fe") return Integrator::FE;
  if (s == "rk5") return Integrator::RK5;
  throw ValidationError("unknown integrator '" + s + "' (expected fe or rk5)");
}

int LayerSchedule::layer(int step, int schedule_length) const {
  int l = step / std::max(1, substeps);
  if (freeze_after) l = std::min(l, *freeze_after);
  return std::clamp(l, 0, schedule_length - 1);
}

Trajectory integrate(const ClosedLoop& cl, const VectorXd& zeta0, int steps, double h, Integrator method,
                     const LayerSchedule& schedule) {
  if (steps < 1) throw ValidationError("need at least one step");
  if (!(h > 0)) throw ValidationError("step size must be positive");
  if (zeta0.size() != cl.dim()) throw DimensionError("initial closed-loop state has wrong length");
  check_finite(zeta0, 0);

  Trajectory tr;
  tr.h = h;
  tr.steps = steps;
  tr.plant_dim = cl.plant_dim();
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  const int len = cl.controller().schedule_length();

  VectorXd z = zeta0;
  for (int k = 0; k <= steps; ++k) {
    const int layer = schedule.layer(k, len);
    tr.times.push_back(k * h);
    tr.states.push_back(z);
    tr.inputs.push_back(cl.input(z, layer));
    tr.outputs.push_back(cl.output(z));
    if (k == steps) break;
    tr.layers.push_back(layer);
    const auto f = [&](const VectorXd& s) { return cl.vector_field(s, layer); };
    z = method == Integrator::FE ? fe_step(f, z, h) : dp5_step(f, z, h);
    check_finite(z, k + 1);
  }
  return tr;
}

namespace {

bool robot_layout(const PHNetwork& plant) {
  for (int i = 0; i < plant.nodes(); ++i)
    if (plant.state_dims()[i] != 4 || plant.port_dims()[i] != 2) return false;
  return plant.position_offset().has_value() && *plant.position_offset() == 2;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const PHNetwork& plant,
                          const std::vector<int>& xi_dims) {
  const int m = plant.nodes();
  const bool robots = robot_layout(plant);
  int max_n = 0, max_u = 0, max_xi = 0;
  for (int i = 0; i < m; ++i) {
    max_n = std::max(max_n, plant.state_dims()[i]);
    max_u = std::max(max_u, plant.port_dims()[i]);
  }
  for (int d : xi_dims) max_xi = std::max(max_xi, d);
  const bool has_xi = !xi_dims.empty();
  if (has_xi && static_cast<int>(xi_dims.size()) != m) throw DimensionError("xi_dims must have one entry per node");

  out << "t,node";
  if (robots) {
    out << ",px,py,qx,qy,ux,uy";
  } else {
    for (int j = 1; j <= max_n; ++j) out << ",x" << j;
    for (int j = 1; j <= max_u; ++j) out << ",u" << j;
  }
  for (int j = 1; j <= max_xi; ++j) out << ",xi" << j;
  out << '\n';

  const auto xi_off = block_offsets(xi_dims.empty() ? std::vector<int>(m, 0) : xi_dims);
  out << std::setprecision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const VectorXd& z = traj.states[k];
    const VectorXd& u = traj.inputs[k];
    for (int i = 0; i < m; ++i) {
      out << traj.times[k] << ',' << (i + 1);
      const int ni = plant.state_dims()[i], ui = plant.port_dims()[i];
      for (int j = 0; j < max_n; ++j) {
        out << ',';
        if (j < ni) out << z(plant.state_offset(i) + j);
      }
      for (int j = 0; j < max_u; ++j) {
        out << ',';
        if (j < ui) out << u(plant.port_offset(i) + j);
      }
      for (int j = 0; j < max_xi; ++j) {
        out << ',';
        if (j < xi_dims[i]) out << z(traj.plant_dim + xi_off[i] + j);
      }
      out << '\n';
    }
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const PHNetwork& plant,
                          const std::vector<int>& xi_dims) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing", path);
  write_trajectory_csv(out, traj, plant, xi_dims);
}

}  // namespace disco
