#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "disco/error.hpp"
#include "disco/simulate.hpp"
#include "helpers.hpp"

using namespace disco;
using disco::testing::oscillator_loop;
using disco::testing::random_vector;
using disco::testing::ring_options;

namespace {

ClosedLoop bench_loop(std::uint64_t seed, int layers = 5) {
  const RobotFleet fleet = robot_benchmark(RobotFleetParams::defaults(12));
  Controller c(ring_options(12, layers, seed));
  disco::testing::perturb(c, seed + 100);
  return ClosedLoop(fleet.plant, c);
}

}  // namespace

TEST(ClosedLoop, InterconnectionIsSkew) {
  const ClosedLoop cl = bench_loop(1);
  EXPECT_EQ(cl.dim(), 96);
  EXPECT_TRUE((cl.psi() + cl.psi().transpose()).isZero(1e-14));
  EXPECT_TRUE(cl.dissipation().isApprox(cl.dissipation().transpose()));
  EXPECT_TRUE(cl.system_matrix().isApprox(cl.psi() - cl.dissipation()));
}

TEST(ClosedLoop, ZeroGainDecouples) {
  const RobotFleet fleet = robot_benchmark(RobotFleetParams::defaults(12));
  const ControllerOptions o = ring_options(12, 2, 3);
  const ClosedLoop cl(fleet.plant, disco::testing::with_gain(o, Eigen::MatrixXd::Zero(48, 24)));
  EXPECT_TRUE(cl.psi().topRightCorner(48, 48).isZero(0.0));
  EXPECT_TRUE(cl.psi().bottomLeftCorner(48, 48).isZero(0.0));
  std::mt19937_64 rng(4);
  const Eigen::VectorXd z = random_vector(rng, 96);
  EXPECT_TRUE(cl.vector_field(z, 0).head(48).isApprox(plant_dynamics(fleet.plant, z.head(48), Eigen::VectorXd::Zero(24))));
}

TEST(ClosedLoop, EnergyIsAdditive) {
  const ClosedLoop cl = bench_loop(2);
  std::mt19937_64 rng(5);
  const Eigen::VectorXd z = random_vector(rng, 96);
  const Eigen::VectorXd x = z.head(48), xi = z.tail(48);
  for (int l = 0; l < 5; ++l) {
    EXPECT_NEAR(total_energy(cl, z, l), cl.plant().energy(x) + energy_value(cl.controller(), xi, l), 1e-12);
    Eigen::VectorXd g(96);
    g << cl.plant().gradient(x), energy_gradient(cl.controller(), xi, l);
    EXPECT_TRUE(cl.energy_gradient(z, l).isApprox(g, 1e-14));
  }
}

TEST(ClosedLoop, InputMatchesControllerOutput) {
  const ClosedLoop cl = bench_loop(3);
  std::mt19937_64 rng(6);
  const Eigen::VectorXd z = random_vector(rng, 96);
  EXPECT_TRUE(cl.input(z, 2).isApprox(controller_output(cl.controller(), z.tail(48), 2)));
  EXPECT_TRUE(cl.output(z).isApprox(plant_output(cl.plant(), z.head(48))));
  // Closed-loop field equals plant and controller fields evaluated separately.
  Eigen::VectorXd f(96);
  f << plant_dynamics(cl.plant(), z.head(48), cl.input(z, 2)),
      controller_dynamics(cl.controller(), z.tail(48), cl.output(z), 2);
  EXPECT_TRUE(cl.vector_field(z, 2).isApprox(f, 1e-12));
}

TEST(ClosedLoop, RejectsMismatchedPorts) {
  const RobotFleet fleet = robot_benchmark(RobotFleetParams::defaults(6));
  EXPECT_THROW(ClosedLoop(fleet.plant, Controller(ring_options(12, 1, 0))), DimensionError);
}

TEST(StepFe, OscillatorByHand) {
  const ClosedLoop cl = oscillator_loop();
  Eigen::VectorXd z(3);
  z << 1, 0, 0.3;
  const Eigen::VectorXd next = step_fe(cl, z, 0, 0.05);
  EXPECT_NEAR(next(0), 1.0, 1e-15);
  EXPECT_NEAR(next(1), 0.05, 1e-15);
  EXPECT_EQ(step_fe(cl, z, 0, 0.0), z);
}

TEST(Integrate, FeMatchesRepeatedSteps) {
  const ClosedLoop cl = bench_loop(4);
  const Eigen::VectorXd z0 = (Eigen::VectorXd(96) << robot_benchmark(RobotFleetParams::defaults(12)).initial_state,
                              cl.controller().initial_state())
                                 .finished();
  const Trajectory t = integrate(cl, z0, 12, 0.05, Integrator::FE);
  ASSERT_EQ(t.states.size(), 13u);
  Eigen::VectorXd z = z0;
  for (int k = 0; k < 12; ++k) {
    EXPECT_EQ(t.layers[k], std::min(k, 4));
    z = step_fe(cl, z, k, 0.05);
  }
  EXPECT_EQ(t.states.back(), z);
  EXPECT_NEAR(t.times.back(), 0.6, 1e-15);
}

TEST(Integrate, Rk5ConservesOscillatorEnergy) {
  const ClosedLoop cl = oscillator_loop();
  const Eigen::VectorXd z0 = Eigen::Vector3d(1, 0, 0);
  const double h = 0.01;
  const int steps = static_cast<int>(std::round(10 * 2 * std::numbers::pi / h));
  const Trajectory t = integrate(cl, z0, steps, h, Integrator::RK5);
  const double e0 = cl.plant().energy(z0.head(2));
  double drift = 0;
  for (const auto& z : t.states) drift = std::max(drift, std::abs(cl.plant().energy(z.head(2)) - e0));
  EXPECT_LE(drift, 1e-8);
  // Period 2 pi: after 10 periods the state is back near the start.
  const Trajectory exact = integrate(cl, z0, 628, 0.01, Integrator::RK5);
  EXPECT_NEAR(exact.states.back()(0), std::cos(6.28), 1e-9);
}

TEST(Integrate, Rk5IsFifthOrder) {
  const ClosedLoop cl = oscillator_loop();
  const Eigen::VectorXd z0 = Eigen::Vector3d(1, 0, 0);
  // p(t) = cos t, q(t) = sin t
  const auto err = [&](int steps) {
    const Trajectory t = integrate(cl, z0, steps, 2.0 / steps, Integrator::RK5);
    return std::hypot(t.states.back()(0) - std::cos(2.0), t.states.back()(1) - std::sin(2.0));
  };
  const double order = std::log2(err(10) / err(20));
  EXPECT_GT(order, 4.5);
  EXPECT_LT(order, 6.5);
}

TEST(Integrate, DivergenceIsReported) {
  // FE amplifies the oscillator by sqrt(1 + h^2) per step.
  const ClosedLoop cl = oscillator_loop();
  EXPECT_THROW(integrate(cl, Eigen::Vector3d(1, 1, 0), 1000, 10.0, Integrator::FE), DivergenceError);
  EXPECT_THROW(integrate(cl, Eigen::Vector3d(1, 1, 0), 0, 0.1, Integrator::FE), ValidationError);
}

TEST(LayerJacobian, MatchesFiniteDifferences) {
  const ClosedLoop cl = bench_loop(5);
  std::mt19937_64 rng(7);
  const Eigen::VectorXd z = random_vector(rng, 96);
  const Eigen::MatrixXd jac = layer_jacobian(cl, z, 3, 0.05);
  Eigen::MatrixXd fd(96, 96);
  const double e = 1e-6;
  for (int j = 0; j < 96; ++j) {
    Eigen::VectorXd zp = z, zm = z;
    zp(j) += e;
    zm(j) -= e;
    fd.col(j) = (step_fe(cl, zp, 3, 0.05) - step_fe(cl, zm, 3, 0.05)) / (2 * e);
  }
  EXPECT_LE((jac - fd).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(LayerJacobian, OscillatorNorm) {
  const ClosedLoop cl = oscillator_loop();
  for (double h : {0.01, 0.05, 0.2}) {
    const Eigen::MatrixXd j = layer_jacobian(cl, Eigen::Vector3d(0.3, -0.2, 0.1), 0, h);
    EXPECT_NEAR(Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues()(0), std::sqrt(1 + h * h), 1e-12);
  }
}

TEST(LayerSchedule, SubstepsAndFreeze) {
  LayerSchedule s;
  EXPECT_EQ(s.layer(7, 10), 7);
  EXPECT_EQ(s.layer(70, 10), 9);
  s.substeps = 8;
  EXPECT_EQ(s.layer(7, 10), 0);
  EXPECT_EQ(s.layer(8, 10), 1);
  EXPECT_EQ(s.layer(799, 100), 99);
  s.freeze_after = 3;
  EXPECT_EQ(s.layer(800, 100), 3);
}

TEST(Integrator, NamesRoundTrip) {
  for (Integrator m : {Integrator::FE, Integrator::RK5}) EXPECT_EQ(integrator_from_string(to_string(m)), m);
  EXPECT_THROW(integrator_from_string("euler"), ValidationError);
}

TEST(TrajectoryCsv, RobotHeaderAndRows) {
  const ClosedLoop cl = bench_loop(6, 1);
  const Eigen::VectorXd z0 = (Eigen::VectorXd(96) << robot_benchmark(RobotFleetParams::defaults(12)).initial_state,
                              cl.controller().initial_state())
                                 .finished();
  const Trajectory t = integrate(cl, z0, 3, 0.05, Integrator::FE);
  std::ostringstream out;
  write_trajectory_csv(out, t, cl.plant(), cl.controller().options().xi_dims);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,node,px,py,qx,qy,ux,uy,xi1,xi2,xi3,xi4");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4 * 12);
}

TEST(TrajectoryCsv, GenericHeader) {
  const ClosedLoop cl = oscillator_loop();
  const Trajectory t = integrate(cl, Eigen::Vector3d(1, 0, 0), 1, 0.1, Integrator::FE);
  std::ostringstream out;
  write_trajectory_csv(out, t, cl.plant());
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "t,node,x1,x2,u1");
}
