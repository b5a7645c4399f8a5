#include "disco/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

#include <Eigen/Sparse>

#include "disco/error.hpp"
#include "disco/integrators.hpp"

namespace disco {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Sparse = Eigen::SparseMatrix<double>;

namespace {

Sparse to_sparse(const MatrixXd& m) {
  Sparse s = m.sparseView(0.0, 0.0);
  s.makeCompressed();
  return s;
}

// Layer maps I + h M H_k, stored as (M sparse, h H_k sparse) so products
// cost one dense-times-sparse pass each.
struct LayerFactors {
  Sparse m;
  std::vector<Sparse> hh;

  LayerFactors(const ClosedLoop& cl, const Trajectory& traj) : m(to_sparse(cl.system_matrix())) {
    hh.reserve(traj.steps);
    for (int k = 0; k < traj.steps; ++k)
      hh.push_back(to_sparse(traj.h * cl.energy_hessian(traj.states[k], traj.layers[k])));
  }

  // p <- p * (I + M hH_k)
  void right_multiply(MatrixXd& p, int k, MatrixXd& scratch) const {
    scratch.noalias() = p * m;
    p.noalias() += scratch * hh[k];
  }
};

}  // namespace

BsmMap bsm_map(const ClosedLoop& cl, const Trajectory& traj, const BsmOptions& opts) {
  if (traj.steps < 1 || static_cast<int>(traj.states.size()) != traj.steps + 1)
    throw ValidationError("trajectory is incomplete");
  for (int k = 0; k <= traj.steps; ++k)
    if (!traj.states[k].allFinite()) throw DivergenceError("trajectory contains a non-finite state", k);

  const int n = traj.steps;
  const int d = cl.dim();
  const LayerFactors lf(cl, traj);
  BsmMap out;
  out.steps = n;
  out.from_end.assign(n + 1, 0.0);
  out.from_mid.assign(n / 2 + 1, 0.0);
  out.min_norm = std::numeric_limits<double>::infinity();
  out.max_norm = 0.0;

  const auto record = [&](int j, int i, double norm) {
    if (opts.keep_entries) out.entries.push_back({j, i, norm});
    if (i < j) {
      out.min_norm = std::min(out.min_norm, norm);
      out.max_norm = std::max(out.max_norm, norm);
    }
    if (j == n) out.from_end[n - i] = norm;
    if (j == n / 2) out.from_mid[n / 2 - i] = norm;
  };

  std::vector<int> targets;
  if (opts.all_pairs) {
    for (int j = 0; j <= n; ++j) targets.push_back(j);
  } else {
    targets = {n / 2, n};
    if (n / 2 == n) targets.pop_back();
  }

  MatrixXd p(d, d), scratch(d, d);
  VectorXd warm;
  for (int j : targets) {
    p.setIdentity();
    record(j, j, 1.0);
    warm.resize(0);
    for (int i = j - 1; i >= 0; --i) {
      lf.right_multiply(p, i, scratch);
      const double norm = spectral_norm(p, opts.power, &warm);
      if (!std::isfinite(norm)) throw DivergenceError("sensitivity product overflowed", i);
      record(j, i, norm);
    }
  }
  return out;
}

void write_bsm_csv(const std::string& path, const BsmMap& map) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing", path);
  out << "j,i,norm\n" << std::setprecision(17);
  for (const auto& e : map.entries) out << e.j << ',' << e.i << ',' << e.norm << '\n';
}

ConservedFormReport check_conserved_form(const ClosedLoop& cl, const VectorXd& zeta0, int steps, double h,
                                         Integrator method, const LayerSchedule& schedule) {
  if (cl.dissipation().cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("conserved form only holds for lossless loops (R = 0 and R_c = 0)");
  if (steps < 1 || !(h > 0)) throw ValidationError("need steps >= 1 and h > 0");
  const int d = cl.dim();
  if (zeta0.size() != d) throw DimensionError("initial state has wrong length");

  const MatrixXd& psi = cl.psi();
  const MatrixXd& m = cl.system_matrix();
  const double scale = psi.cwiseAbs().maxCoeff();
  const auto drift_of = [&](const MatrixXd& z) {
    if (scale == 0.0) return 0.0;
    return (z * psi * z.transpose() - psi).cwiseAbs().maxCoeff() / scale;
  };

  ConservedFormReport rep;
  VectorXd state(d + d * d);
  state.head(d) = zeta0;
  Eigen::Map<MatrixXd>(state.data() + d, d, d).setIdentity();
  rep.drift.push_back(0.0);
  const int len = cl.controller().schedule_length();

  for (int k = 0; k < steps; ++k) {
    const int layer = schedule.layer(k, len);
    const auto f = [&](const VectorXd& s) {
      VectorXd ds(s.size());
      const VectorXd zeta = s.head(d);
      ds.head(d) = cl.vector_field(zeta, layer);
      const Eigen::Map<const MatrixXd> z(s.data() + d, d, d);
      Eigen::Map<MatrixXd>(ds.data() + d, d, d).noalias() = m * (cl.energy_hessian(zeta, layer) * z);
      return ds;
    };
    state = method == Integrator::FE ? fe_step(f, state, h) : dp5_step(f, state, h);
    check_finite(state, k + 1);
    const double dr = drift_of(Eigen::Map<const MatrixXd>(state.data() + d, d, d));
    rep.drift.push_back(dr);
    rep.max_drift = std::max(rep.max_drift, dr);
  }
  return rep;
}

DissipationReport check_dissipation(const ClosedLoop& cl, const VectorXd& zeta0, int steps, double h,
                                    Integrator method, int layer, double tolerance) {
  DissipationReport rep;
  if (layer < 0 || layer >= cl.controller().schedule_length())
    throw ValidationError("layer index outside the controller schedule");
  if (steps < 1 || !(h > 0)) throw ValidationError("need steps >= 1 and h > 0");
  VectorXd z = zeta0;
  double p = cl.total_energy(z, layer);
  rep.energy.push_back(p);
  const auto f = [&](const VectorXd& s) { return cl.vector_field(s, layer); };
  for (int k = 0; k < steps; ++k) {
    z = method == Integrator::FE ? fe_step(f, z, h) : dp5_step(f, z, h);
    check_finite(z, k + 1);
    const double next = cl.total_energy(z, layer);
    const double violation = (next - p) / (1.0 + std::abs(p));
    rep.max_violation = std::max(rep.max_violation, violation);
    if (next - p > tolerance * (1.0 + std::abs(p))) rep.monotone = false;
    rep.energy.push_back(next);
    p = next;
  }
  return rep;
}

DistributedReport verify_distributed(const Controller& c, int output_radius_limit, int comm_radius_limit, int trials,
                                     std::uint64_t seed) {
  const ControllerOptions& o = c.options();
  DistributedReport rep;

  const BlockPattern sp = c.state_pattern();
  const BlockPattern pp = c.port_pattern();
  rep.masks_ok = conforms(BlockMatrix(o.xi_dims, o.xi_dims, c.J()), sp) &&
                 conforms(BlockMatrix(o.xi_dims, o.xi_dims, c.Rc()), sp) &&
                 conforms(BlockMatrix(o.xi_dims, o.y_dims, c.K()), pp);
  const EnergyParams masks = energy_masks(o);
  for (int k = 0; k < c.schedule_length(); ++k) {
    const EnergyParams& t = c.theta(k);
    for (std::size_t l = 0; l < t.weights.size(); ++l)
      if (t.weights[l].value.cwiseProduct(masks.weights[l].mask) != t.weights[l].value) rep.masks_ok = false;
  }
  rep.radii_ok = o.output_radius <= output_radius_limit && o.output_radius + 2 * o.energy_radius <= comm_radius_limit;

  const int m = c.nodes();
  const auto xo = block_offsets(o.xi_dims);
  const auto yo = block_offsets(o.y_dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto random_vec = [&](Eigen::Index n) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
  };

  const BoolMatrix reach_y = o.comm.power(output_radius_limit);
  const BoolMatrix reach_xi = o.comm.power(comm_radius_limit);
  rep.output_perturbation_ok = rep.state_perturbation_ok = true;
  const int layer = 0;

  for (int t = 0; t < trials; ++t) {
    const VectorXd xi = random_vec(c.state_dim());
    const VectorXd y = random_vec(c.measurement_dim());
    const VectorXd u0 = controller_output(c, xi, layer);
    const VectorXd f0 = controller_dynamics(c, xi, y, layer);
    // response of node i's input (ports in y layout) and controller rate
    const auto response = [&](const VectorXd& u1, const VectorXd& f1, int i) {
      const double du = (u1 - u0).segment(yo[i], o.y_dims[i]).cwiseAbs().maxCoeff();
      const double df = (f1 - f0).segment(xo[i], o.xi_dims[i]).cwiseAbs().maxCoeff();
      return std::max(du, df);
    };
    for (int j = 0; j < m; ++j) {
      VectorXd y1 = y;
      y1.segment(yo[j], o.y_dims[j]) += random_vec(o.y_dims[j]);
      const VectorXd fy = controller_dynamics(c, xi, y1, layer);
      VectorXd xi1 = xi;
      xi1.segment(xo[j], o.xi_dims[j]) += random_vec(o.xi_dims[j]);
      const VectorXd ux = controller_output(c, xi1, layer);
      const VectorXd fx = controller_dynamics(c, xi1, y, layer);
      for (int i = 0; i < m; ++i) {
        if (reach_y(i, j) == 0) {
          const double r = response(u0, fy, i);
          rep.max_output_response = std::max(rep.max_output_response, r);
          if (r > 1e-12) rep.output_perturbation_ok = false;
          ++rep.pairs_checked;
        }
        if (reach_xi(i, j) == 0) {
          const double r = response(ux, fx, i);
          rep.max_state_response = std::max(rep.max_state_response, r);
          if (r > 1e-12) rep.state_perturbation_ok = false;
          ++rep.pairs_checked;
        }
      }
    }
  }
  return rep;
}

CollisionCount count_collisions(const Trajectory& traj, const PHNetwork& plant, double safety_distance) {
  CollisionCount out;
  if (!plant.position_offset()) return out;
  const int m = plant.nodes();
  std::vector<char> inside(static_cast<std::size_t>(m) * m, 0);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const VectorXd x = traj.plant_state(static_cast<int>(k));
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        const double d = (plant.position(x, i) - plant.position(x, j)).norm();
        char& was = inside[static_cast<std::size_t>(i) * m + j];
        if (d < safety_distance) {
          ++out.step_pairs;
          if (!was) ++out.events;
          was = 1;
        } else {
          was = 0;
        }
      }
  }
  return out;
}

}  // namespace disco
