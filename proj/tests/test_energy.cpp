#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "disco/controller.hpp"
#include "disco/energy.hpp"
#include "disco/error.hpp"
#include "helpers.hpp"

using namespace disco;
using disco::testing::random_matrix;
using disco::testing::random_vector;

namespace {

EnergyParams scalar_params(double w, double b) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  EnergyParams t;
  t.weights.emplace_back("W", w * one, one);
  t.biases.emplace_back("b", b * one, one);
  t.readout = Parameter("r", one, one, false);
  return t;
}

struct Case {
  EnergySpec spec;
  EnergyParams theta;
  int dim;
};

// Random parameters inside the structural masks of a small ring controller.
Case random_case(const EnergySpec& spec, int energy_radius, std::mt19937_64& rng) {
  ControllerOptions o = disco::testing::ring_options(4, 1, 0);
  o.energy = spec;
  o.energy_radius = energy_radius;
  EnergyParams t = energy_masks(o);
  for (auto* group : {&t.weights, &t.biases})
    for (Parameter& p : *group) {
      p.value = random_matrix(rng, p.mask.rows(), p.mask.cols(), 0.7);
      p.project();
    }
  if (spec.trainable_readout) {
    t.readout.value = random_matrix(rng, t.readout.mask.rows(), 1);
    t.readout.project();
  }
  return {spec, t, 16};
}

std::vector<EnergySpec> all_specs() {
  return {EnergySpec::logcosh_single(4), EnergySpec::logcosh_single(6),
          EnergySpec::two_layer(5, 3, Activation::LogCosh), EnergySpec::two_layer(4, 4, Activation::Tanh),
          EnergySpec::two_layer(3, 2, Activation::Softplus), EnergySpec::deep_stack(4, 5)};
}

Eigen::VectorXd fd_grad(const Case& c, const Eigen::VectorXd& xi, double h = 1e-6) {
  Eigen::VectorXd g(xi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    Eigen::VectorXd u = xi, d = xi;
    u(i) += h;
    d(i) -= h;
    g(i) = (energy_value(c.spec, c.theta, u) - energy_value(c.spec, c.theta, d)) / (2 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hess(const Case& c, const Eigen::VectorXd& xi, double h = 1e-5) {
  Eigen::MatrixXd H(xi.size(), xi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    Eigen::VectorXd u = xi, d = xi;
    u(i) += h;
    d(i) -= h;
    H.col(i) = (energy_gradient(c.spec, c.theta, u) - energy_gradient(c.spec, c.theta, d)) / (2 * h);
  }
  return H;
}

}  // namespace

TEST(LogCosh, OverflowSafe) {
  EXPECT_EQ(log_cosh(0.0), 0.0);
  EXPECT_NEAR(log_cosh(1.0), 0.43378083, 1e-8);
  EXPECT_NEAR(log_cosh(50.0), 50.0 - std::log(2.0), 1e-12);
  EXPECT_NEAR(log_cosh(-800.0), 800.0 - std::log(2.0), 1e-9);
  EXPECT_TRUE(std::isfinite(log_cosh(1e6)));
}

TEST(EnergyValue, ScalarExamples) {
  const EnergySpec s = EnergySpec::logcosh_single(1);
  EXPECT_EQ(energy_value(s, scalar_params(1, 0), Eigen::VectorXd::Zero(1)), 0.0);
  EXPECT_NEAR(energy_value(s, scalar_params(1, 0), Eigen::VectorXd::Ones(1)), 0.43378083, 1e-8);
}

TEST(EnergyGradient, ScalarExamples) {
  const EnergySpec s = EnergySpec::logcosh_single(1);
  EXPECT_EQ(energy_gradient(s, scalar_params(1, 0), Eigen::VectorXd::Zero(1))(0), 0.0);
  EXPECT_NEAR(energy_gradient(s, scalar_params(2, 0), Eigen::VectorXd::Ones(1))(0), 1.9280552, 1e-7);
}

TEST(EnergyHessian, ScalarAtZero) {
  const EnergySpec s = EnergySpec::logcosh_single(1);
  EXPECT_NEAR(energy_hessian(s, scalar_params(1, 0), Eigen::VectorXd::Zero(1))(0, 0), 1.0, 1e-15);
}

TEST(EnergyValue, LogcoshSingleClosedForm) {
  std::mt19937_64 rng(1);
  const Case c = random_case(EnergySpec::logcosh_single(4), 0, rng);
  const Eigen::VectorXd xi = random_vector(rng, 16);
  const Eigen::VectorXd z = c.theta.weights[0].value * xi + c.theta.biases[0].value;
  double phi = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) phi += std::log(std::cosh(z(i)));
  EXPECT_NEAR(energy_value(c.spec, c.theta, xi), phi, 1e-12 * std::abs(phi));
  const Eigen::VectorXd g = c.theta.weights[0].value.transpose() * z.array().tanh().matrix();
  EXPECT_LE((energy_gradient(c.spec, c.theta, xi) - g).norm(), 1e-13 * g.norm());
  const Eigen::VectorXd sech2 = 1.0 - z.array().tanh().square();
  const Eigen::MatrixXd H = c.theta.weights[0].value.transpose() * sech2.asDiagonal() * c.theta.weights[0].value;
  EXPECT_LE((energy_hessian(c.spec, c.theta, xi) - H).norm(), 1e-13 * H.norm());
}

TEST(EnergyGradient, MatchesFiniteDifferencesForEveryVariant) {
  std::mt19937_64 rng(2);
  for (const EnergySpec& spec : all_specs())
    for (int trial = 0; trial < 20; ++trial) {
      const Case c = random_case(spec, trial % 2, rng);
      const Eigen::VectorXd xi = random_vector(rng, 16);
      const Eigen::VectorXd g = energy_gradient(c.spec, c.theta, xi);
      EXPECT_LE((g - fd_grad(c, xi)).norm(), 1e-7 * std::max(1.0, g.norm())) << to_string(spec.variant);
    }
}

TEST(EnergyHessian, SymmetricAndMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (const EnergySpec& spec : all_specs())
    for (int trial = 0; trial < 10; ++trial) {
      const Case c = random_case(spec, trial % 2, rng);
      const Eigen::VectorXd xi = random_vector(rng, 16);
      const Eigen::MatrixXd H = energy_hessian(c.spec, c.theta, xi);
      EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((H - fd_hess(c, xi)).norm(), 1e-5 * std::max(1.0, H.norm())) << to_string(spec.variant);
      const Eigen::VectorXd v = random_vector(rng, 16);
      EXPECT_LE((energy_hessian_vector(c.spec, c.theta, xi, v) - H * v).norm(), 1e-10 * std::max(1.0, (H * v).norm()));
    }
}

TEST(EnergyHessian, LogcoshSingleIsPsd) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Case c = random_case(EnergySpec::logcosh_single(4), 0, rng);
    const Eigen::MatrixXd H = energy_hessian(c.spec, c.theta, random_vector(rng, 16, 2.0));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(EnergyHessian, SeparableWhenEnergyRadiusIsZero) {
  std::mt19937_64 rng(5);
  for (const EnergySpec& spec : all_specs()) {
    const Case c = random_case(spec, 0, rng);
    const Eigen::MatrixXd H = energy_hessian(c.spec, c.theta, random_vector(rng, 16));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) {
          EXPECT_TRUE(H.block(4 * i, 4 * j, 4, 4).isZero(0.0)) << i << "," << j;
        }
  }
}

TEST(EnergyGradientVjp, MatchesFiniteDifferencesOfDirectionalGradient) {
  std::mt19937_64 rng(6);
  for (const EnergySpec& spec : all_specs()) {
    Case c = random_case(spec, 1, rng);
    const Eigen::VectorXd xi = random_vector(rng, 16);
    const Eigen::VectorXd v = random_vector(rng, 16);
    const EnergyGradientVjp vjp = energy_gradient_vjp(c.spec, c.theta, xi, v);
    const auto f = [&] { return v.dot(energy_gradient(c.spec, c.theta, xi)); };
    const double h = 1e-6;
    const auto check = [&](Parameter& p, const Eigen::MatrixXd& analytic) {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        if (p.mask.data()[i] == 0.0) {
          EXPECT_EQ(analytic.data()[i], 0.0);
          continue;
        }
        const double orig = p.value.data()[i];
        p.value.data()[i] = orig + h;
        const double up = f();
        p.value.data()[i] = orig - h;
        const double down = f();
        p.value.data()[i] = orig;
        EXPECT_NEAR(analytic.data()[i], (up - down) / (2 * h), 1e-6 * std::max(1.0, std::abs(analytic.data()[i])))
            << to_string(spec.variant) << " " << p.name;
      }
    };
    for (std::size_t l = 0; l < c.theta.weights.size(); ++l) check(c.theta.weights[l], vjp.d_weights[l]);
    for (std::size_t l = 0; l < c.theta.biases.size(); ++l) check(c.theta.biases[l], vjp.d_biases[l]);
    check(c.theta.readout, vjp.d_readout);
    EXPECT_LE((vjp.d_xi - energy_hessian(c.spec, c.theta, xi) * v).norm(), 1e-10 * std::max(1.0, vjp.d_xi.norm()));
  }
}

TEST(EnergyValue, ShapeMismatchThrows) {
  const EnergySpec s = EnergySpec::logcosh_single(1);
  EXPECT_THROW(energy_value(s, scalar_params(1, 0), Eigen::VectorXd::Zero(2)), DimensionError);
}

TEST(EnergySpec, VariantNamesRoundTrip) {
  for (const EnergySpec& s : all_specs()) EXPECT_EQ(energy_variant_from_string(to_string(s.variant)), s.variant);
  for (Activation a : {Activation::LogCosh, Activation::Tanh, Activation::Softplus})
    EXPECT_EQ(activation_from_string(to_string(a)), a);
  EXPECT_THROW(energy_variant_from_string("deep"), ValidationError);
}
