#include <random>

#include <gtest/gtest.h>

#include "disco/error.hpp"
#include "disco/integrators.hpp"
#include "disco/plant.hpp"
#include "helpers.hpp"

using namespace disco;
using disco::testing::random_vector;

namespace {

Eigen::VectorXd fd_gradient(const PHNetwork& net, const Eigen::VectorXd& x, double step = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, down = x;
    up(i) += step;
    down(i) -= step;
    g(i) = (net.energy(up) - net.energy(down)) / (2 * step);
  }
  return g;
}

// Two-node network with 2-dim states and the given port and coupling.
PHNetwork two_node(const Eigen::MatrixXd& g_block, const Eigen::MatrixXd& f12, const Eigen::MatrixXd& f21) {
  const int p = static_cast<int>(g_block.rows());
  Eigen::Matrix2d om;
  om << 0, -1, 1, 0;
  BlockMatrix coupling({2, 2}, {p, p});
  coupling.block(0, 1) = f12;
  coupling.block(1, 0) = f21;
  const auto v = NodeHamiltonian::quadratic(Eigen::Vector2d::Zero(), 0.5 * Eigen::Matrix2d::Identity());
  return PHNetwork(Graph::complete(2), {2, 2}, {p, p}, block_diagonal({om, om}), BlockMatrix({2, 2}, {2, 2}),
                   coupling, block_diagonal({g_block, g_block}), {v, v}, Eigen::Vector4d::Zero());
}

}  // namespace

TEST(PlantGradient, ZeroAtTarget) {
  const RobotFleet f = robot_benchmark(RobotFleetParams::defaults(3));
  EXPECT_TRUE(f.plant.gradient(f.plant.target()).isZero(0.0));
}

TEST(PlantGradient, RobotNodeMomentum) {
  RobotFleetParams p = RobotFleetParams::defaults(2);
  p.targets = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  const RobotFleet f = robot_benchmark(p);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
  x(0) = 1.0;
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(8);
  expect(0) = 1.0;
  EXPECT_TRUE(f.plant.gradient(x).isApprox(expect, 1e-15));
}

TEST(PlantGradient, MatchesFiniteDifferences) {
  RobotFleetParams p = RobotFleetParams::defaults(4);
  p.masses = {1.0, 2.0, 0.5, 3.0};
  p.springs = {1.0, 0.3, 2.0, 1.5};
  const RobotFleet f = robot_benchmark(p);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd x = random_vector(rng, 16);
    const Eigen::VectorXd g = f.plant.gradient(x);
    EXPECT_LE((g - fd_gradient(f.plant, x)).norm(), 1e-7 * g.norm());
  }
}

TEST(PlantDynamics, EquilibriumAtTarget) {
  const RobotFleet f = robot_benchmark(RobotFleetParams::defaults(3));
  EXPECT_TRUE(f.plant.dynamics(f.plant.target(), Eigen::VectorXd::Zero(6)).isZero(0.0));
}

TEST(PlantDynamics, DampedRobotHandEvaluation) {
  const RobotFleet f = robot_benchmark(RobotFleetParams::defaults(2));
  Eigen::VectorXd x = f.plant.target();
  x(0) += 1.0;
  const Eigen::VectorXd dx = f.plant.dynamics(x, Eigen::VectorXd::Zero(4));
  EXPECT_NEAR(dx(0), -0.2, 1e-15);
  EXPECT_EQ(dx(1), 0.0);
  EXPECT_NEAR(dx(2), 1.0, 1e-15);
  EXPECT_EQ(dx(3), 0.0);
  EXPECT_TRUE(dx.tail(4).isZero(0.0));
}

TEST(PlantDynamics, ForceEntersMomentumRows) {
  const RobotFleet f = robot_benchmark(RobotFleetParams::defaults(2));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
  u(0) = 1.0;
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(8);
  expect(0) = 1.0;
  EXPECT_EQ(f.plant.dynamics(f.plant.target(), u), expect);
}

TEST(PlantOutput, VelocityReadout) {
  RobotFleetParams p = RobotFleetParams::defaults(2);
  p.masses = {1.0, 2.0};
  const RobotFleet f = robot_benchmark(p);
  Eigen::VectorXd x = f.plant.target();
  x(0) = 2.0;
  x(4) = 2.0;
  const Eigen::VectorXd y = f.plant.output(x);
  EXPECT_EQ(y, (Eigen::Vector4d() << 2, 0, 1, 0).finished());
  EXPECT_TRUE(f.plant.output(f.plant.target()).isZero(0.0));
}

TEST(PlantDynamics, DimensionChecks) {
  const RobotFleet f = robot_benchmark(RobotFleetParams::defaults(2));
  EXPECT_THROW(f.plant.dynamics(Eigen::VectorXd::Zero(7), Eigen::VectorXd::Zero(4)), DimensionError);
  EXPECT_THROW(f.plant.dynamics(Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST(PowerPreserving, ZeroCoupling) {
  EXPECT_TRUE(check_power_preserving(robot_benchmark(RobotFleetParams::defaults(3)).plant));
}

TEST(PowerPreserving, TransposedPortCouplingIsSkew) {
  Eigen::MatrixXd g(1, 2);
  g << 1, 0;
  EXPECT_TRUE(check_power_preserving(two_node(g, g.transpose(), -g.transpose())));
}

TEST(PowerPreserving, SymmetricCouplingFails) {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_FALSE(check_power_preserving(two_node(i2, i2, i2)));
}

TEST(RobotBenchmark, DefaultsMatchBenchmarkConstants) {
  const RobotFleetParams p = RobotFleetParams::defaults();
  ASSERT_EQ(p.nodes, 12);
  for (int i = 0; i < 12; ++i) {
    EXPECT_EQ(p.masses[i], 1.0);
    EXPECT_EQ(p.springs[i], 1.0);
    EXPECT_EQ(p.dampings[i], 0.2);
    EXPECT_NEAR(p.initials[i].norm(), 2.0, 1e-12);
    EXPECT_TRUE(p.targets[i].isApprox(-p.initials[i]));
  }
  // V_i = p^2 / 2 + |q - qbar|^2 / 2
  const RobotFleet f = robot_benchmark(p);
  std::mt19937_64 rng(4);
  const Eigen::VectorXd x = random_vector(rng, 48);
  double v = 0.0;
  for (int i = 0; i < 12; ++i) {
    v += 0.5 * x.segment<2>(4 * i).squaredNorm();
    v += 0.5 * (x.segment<2>(4 * i + 2) - p.targets[i]).squaredNorm();
  }
  EXPECT_NEAR(f.plant.energy(x), v, 1e-12 * v);
}

TEST(RobotBenchmark, StationaryAtTarget) {
  const RobotFleet f = robot_benchmark(RobotFleetParams::defaults(3));
  Eigen::VectorXd x = f.plant.target();
  const auto rhs = [&](const Eigen::VectorXd& s) { return f.plant.dynamics(s, Eigen::VectorXd::Zero(6)); };
  for (int k = 0; k < 100; ++k) x = dp5_step(rhs, x, 0.05);
  EXPECT_EQ(x, f.plant.target());
}

TEST(RobotBenchmark, UnforcedEnergyNonIncreasing) {
  const RobotFleet f = robot_benchmark(RobotFleetParams::defaults(12));
  std::mt19937_64 rng(8);
  Eigen::VectorXd x = f.initial_state + random_vector(rng, 48);
  const auto rhs = [&](const Eigen::VectorXd& s) { return f.plant.dynamics(s, Eigen::VectorXd::Zero(24)); };
  double v = f.plant.energy(x);
  for (int k = 0; k < 500; ++k) {
    x = dp5_step(rhs, x, 0.05);
    const double next = f.plant.energy(x);
    EXPECT_LE(next, v + 1e-12 * v);
    v = next;
  }
}

TEST(RobotBenchmark, ValidationNamesFields) {
  RobotFleetParams p = RobotFleetParams::defaults(3);
  p.masses[1] = 0.0;
  try {
    robot_benchmark(p);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "plant.masses[1]");
  }
  p = RobotFleetParams::defaults(3);
  p.targets.pop_back();
  EXPECT_THROW(robot_benchmark(p), ValidationError);
}

TEST(Oscillator, EnergyAndOutput) {
  const PHNetwork osc = disco::testing::oscillator(2.0, 3.0);
  const Eigen::Vector2d x(2.0, 1.0);
  EXPECT_NEAR(osc.energy(x), 4.0 / 4.0 + 1.5, 1e-15);
  EXPECT_NEAR(osc.output(x)(0), 1.0, 1e-15);
}
