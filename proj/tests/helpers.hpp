#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "disco/simulate.hpp"
#include "disco/train.hpp"

namespace disco::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

/// Single mass-spring node, state (p, q), V = p^2 / (2m) + k q^2 / 2,
/// p_dot = -dV/dq - b dV/dp, q_dot = dV/dp, y = dV/dp.
inline PHNetwork oscillator(double m = 1.0, double k = 1.0, double b = 0.0) {
  Eigen::Matrix2d omega;
  omega << 0, -1, 1, 0;
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = b;
  Eigen::MatrixXd g(1, 2);
  g << 1, 0;
  Eigen::Matrix2d u;
  u << 1.0 / (2 * m), 0, 0, k / 2;
  return PHNetwork(Graph::isolated(1), {2}, {1}, BlockMatrix({2}, {2}, omega), BlockMatrix({2}, {2}, r),
                   BlockMatrix({2}, {1}), BlockMatrix({1}, {2}, g),
                   {NodeHamiltonian::quadratic(Eigen::Vector2d::Zero(), u)}, Eigen::Vector2d::Zero());
}

/// Two robots close enough that every pair stays inside the collision
/// radius for short rollouts, so all loss terms are active.
struct SmallInstance {
  ClosedLoop cl;
  Eigen::VectorXd zeta0;
  LossConfig cfg;
};

inline RobotFleetParams two_robots() {
  RobotFleetParams fp = RobotFleetParams::defaults(2);
  fp.initials = {Eigen::Vector2d(-0.5, 0.1), Eigen::Vector2d(0.5, -0.1)};
  return fp;
}

inline ControllerOptions ring_options(int nodes, int layers, std::uint64_t seed);
inline void perturb(Controller& c, std::uint64_t seed, double scale = 0.1);

/// `robots` vehicles on a ring controller with `steps` layers, packed
/// closely (radius 0.6 start circle) so pairs sit inside D = 2.5.
inline SmallInstance small_instance(int robots, int steps, std::uint64_t seed, double safety_distance = 2.5) {
  RobotFleetParams fp = RobotFleetParams::defaults(robots);
  if (robots == 2) {
    fp = two_robots();
  } else {
    for (auto& p : fp.initials) p *= 0.3;
  }
  const RobotFleet fleet = robot_benchmark(fp);
  Controller c(ring_options(robots, steps, seed));
  perturb(c, seed + 1000, 0.1);
  ClosedLoop cl(fleet.plant, c);
  Eigen::VectorXd z0(cl.dim());
  z0 << fleet.initial_state, cl.controller().initial_state();
  LossConfig cfg;
  cfg.steps = steps;
  cfg.safety_distance = safety_distance;
  return {cl, z0, cfg};
}

inline ControllerOptions ring_options(int nodes, int layers, std::uint64_t seed) {
  ControllerOptions o;
  o.comm = Graph::ring(nodes);
  o.xi_dims.assign(nodes, 4);
  o.y_dims.assign(nodes, 2);
  o.layers = layers;
  o.seed = seed;
  return o;
}

/// Adds N(0, scale^2) noise to every parameter (masks re-applied) so that
/// schedule differences and biases are nonzero.
inline void perturb(Controller& c, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (Parameter* p : c.parameters()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += n(rng);
    p->project();
  }
}

/// One controller node with no damping and a log-cosh energy.
inline ControllerOptions single_node(int xi_dim, int y_dim, int layers = 1) {
  ControllerOptions o;
  o.comm = Graph::isolated(1);
  o.xi_dims = {xi_dim};
  o.y_dims = {y_dim};
  o.energy = EnergySpec::logcosh_single(xi_dim);
  o.layers = layers;
  o.rc_scale = 0.0;
  o.rc_damped = 0;
  return o;
}

/// Controller with the given K and A = 0; energy parameters come from a
/// seeded controller with the same options.
inline Controller with_gain(const ControllerOptions& o, const Eigen::MatrixXd& k) {
  const Controller base(o);
  Parameter a = base.a_free();
  a.value.setZero();
  Parameter kp = base.k_param();
  kp.value = k;
  std::vector<EnergyParams> theta;
  for (int l = 0; l < base.schedule_length(); ++l) theta.push_back(base.theta(l));
  return Controller(o, a, kp, base.rc_factors(), theta);
}

/// Oscillator in feedback with a one-state controller of gain k.
inline ClosedLoop oscillator_loop(double k = 0.0, double b = 0.0, int layers = 1) {
  return ClosedLoop(oscillator(1.0, 1.0, b), with_gain(single_node(1, 1, layers), Eigen::MatrixXd::Constant(1, 1, k)));
}

}  // namespace disco::testing
