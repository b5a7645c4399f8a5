#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "disco/error.hpp"
#include "disco/mlp.hpp"
#include "helpers.hpp"

using namespace disco;
using disco::testing::random_vector;

namespace {

MlpOptions ring_mlp(int nodes, std::uint64_t seed) {
  MlpOptions o;
  o.comm = Graph::ring(nodes);
  o.seed = seed;
  return o;
}

void perturb(MlpPolicy& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  for (Parameter* q : p.parameters()) {
    for (Eigen::Index i = 0; i < q->value.size(); ++i) q->value.data()[i] += n(rng);
    q->project();
  }
}

// Node-by-node evaluation with explicit neighbor sums.
Eigen::VectorXd per_node_forward(const MlpPolicy& p, const Eigen::VectorXd& y) {
  const MlpOptions& o = p.options();
  const auto ps = p.parameters();
  const int m = p.nodes(), ni = o.inputs, nh = o.hidden, no = o.outputs;
  Eigen::VectorXd u(m * no);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(nh);
    for (int j = 0; j < m; ++j) {
      if (!o.comm.adjacency()(i, j)) continue;
      a += ps[0]->value.block(i * nh, j * ni, nh, ni) * y.segment(j * ni, ni);
      a += ps[1]->value.block(i * nh, j, nh, 1);
    }
    const Eigen::VectorXd h0 = a.array().tanh();
    const Eigen::VectorXd h1 =
        (ps[2]->value.block(i * nh, i * nh, nh, nh) * h0 + ps[3]->value.middleRows(i * nh, nh)).array().tanh();
    u.segment(i * no, no) = ps[4]->value.block(i * no, i * nh, no, nh) * h1 + ps[5]->value.middleRows(i * no, no);
  }
  return u;
}

}  // namespace

TEST(MlpPolicy, ParameterCountOfTheBenchmark) {
  EXPECT_EQ(MlpPolicy(MlpOptions{}).trainable_count(), 1944);
}

TEST(MlpPolicy, MatchesPerNodeEvaluation) {
  MlpPolicy p(ring_mlp(6, 1));
  perturb(p, 2);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd y = random_vector(rng, 12);
    EXPECT_TRUE(p.forward(y).isApprox(per_node_forward(p, y), 1e-13));
    EXPECT_EQ(mlp_baseline_forward(p, y), p.forward(y));
  }
}

TEST(MlpPolicy, ZeroWeightsGiveZeroInput) {
  MlpPolicy p(ring_mlp(5, 0));
  for (Parameter* q : p.parameters()) q->value.setZero();
  std::mt19937_64 rng(4);
  EXPECT_TRUE(p.forward(random_vector(rng, 10)).isZero(0.0));
}

TEST(MlpPolicy, OutputIsBounded) {
  MlpPolicy p(ring_mlp(4, 5));
  perturb(p, 6);
  const auto ps = p.parameters();
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd u = p.forward(random_vector(rng, 8, 100.0));
    for (Eigen::Index r = 0; r < u.size(); ++r)
      EXPECT_LE(std::abs(u(r)), ps[4]->value.row(r).cwiseAbs().sum() + std::abs(ps[5]->value(r)) + 1e-12);
  }
}

TEST(MlpPolicy, OnlyNeighborsAffectAnInput) {
  MlpPolicy p(ring_mlp(8, 8));
  perturb(p, 9);
  std::mt19937_64 rng(10);
  const Eigen::VectorXd y = random_vector(rng, 16);
  for (int j = 0; j < 8; ++j) {
    Eigen::VectorXd y2 = y;
    y2.segment(2 * j, 2) += random_vector(rng, 2);
    const Eigen::VectorXd du = p.forward(y2) - p.forward(y);
    for (int i = 0; i < 8; ++i) {
      const int dist = std::min((i - j + 8) % 8, (j - i + 8) % 8);
      if (dist > 1) {
        EXPECT_TRUE(du.segment(2 * i, 2).isZero(0.0)) << i << ' ' << j;
      } else {
        EXPECT_FALSE(du.segment(2 * i, 2).isZero(0.0)) << i << ' ' << j;
      }
    }
  }
}

TEST(MlpPolicy, RejectsNonconformingParameters) {
  const MlpOptions o = ring_mlp(5, 0);
  MlpPolicy p(o);
  std::vector<Parameter> ps;
  for (const Parameter* q : std::as_const(p).parameters()) ps.push_back(*q);
  EXPECT_NO_THROW(MlpPolicy(o, ps));
  auto dense = ps;
  dense[0].value.setOnes();
  EXPECT_THROW(MlpPolicy(o, dense), ValidationError);
  auto shaped = ps;
  shaped[2].value = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(MlpPolicy(o, shaped), DimensionError);
  ps.pop_back();
  EXPECT_THROW(MlpPolicy(o, ps), ValidationError);
  EXPECT_THROW(MlpPolicy(MlpOptions{Graph::ring(3), 2, 0, 2, 0}), ValidationError);
}

TEST(MlpPolicy, BackwardMatchesFiniteDifferences) {
  MlpPolicy p(ring_mlp(4, 11));
  perturb(p, 12);
  std::mt19937_64 rng(13);
  const Eigen::VectorXd y = random_vector(rng, 8), w = random_vector(rng, 8);
  std::vector<Eigen::MatrixXd> grads;
  for (const Parameter* q : std::as_const(p).parameters()) grads.push_back(Eigen::MatrixXd::Zero(q->value.rows(), q->value.cols()));
  const Eigen::VectorXd dy = p.backward(y, w, grads);
  const double e = 1e-6;
  for (int j = 0; j < 8; ++j) {
    Eigen::VectorXd yp = y, ym = y;
    yp(j) += e;
    ym(j) -= e;
    EXPECT_NEAR(dy(j), w.dot(p.forward(yp) - p.forward(ym)) / (2 * e), 1e-7);
  }
  const auto ps = p.parameters();
  for (std::size_t k = 0; k < ps.size(); ++k)
    for (Eigen::Index i = 0; i < ps[k]->value.size(); ++i) {
      if (ps[k]->mask.data()[i] == 0.0) continue;
      const double v = ps[k]->value.data()[i];
      ps[k]->value.data()[i] = v + e;
      const double fp = w.dot(p.forward(y));
      ps[k]->value.data()[i] = v - e;
      const double fm = w.dot(p.forward(y));
      ps[k]->value.data()[i] = v;
      EXPECT_NEAR(grads[k].data()[i], (fp - fm) / (2 * e), 1e-7) << ps[k]->name << ' ' << i;
    }
}

TEST(MlpTraining, RolloutGradientMatchesFiniteDifferences) {
  const RobotFleet fleet = robot_benchmark(disco::testing::two_robots());
  MlpOptions o = ring_mlp(2, 14);
  MlpPolicy p(o);
  perturb(p, 15);
  const MlpClosedLoop cl(fleet.plant, p);
  LossConfig cfg;
  cfg.steps = 8;
  cfg.safety_distance = 2.5;
  const GradientReport bp = mlp_backprop(cl, fleet.initial_state, cfg);
  const GradientReport fd = mlp_fd_gradient(cl, fleet.initial_state, cfg);
  EXPECT_GT(bp.loss.lca, 0.0);
  EXPECT_EQ(bp.loss.rw, 0.0);
  EXPECT_LE(max_relative_error(bp.grads, fd.grads), 1e-4);
}

TEST(MlpTraining, LossDecreases) {
  const RobotFleet fleet = robot_benchmark(disco::testing::two_robots());
  const MlpClosedLoop cl(fleet.plant, MlpPolicy(ring_mlp(2, 16)));
  LossConfig cfg;
  cfg.steps = 20;
  AdamOptions adam;
  adam.lr = 1e-2;
  const MlpTrainResult r = mlp_train(cl, fleet.initial_state, cfg, 50, adam);
  ASSERT_EQ(r.history.size(), 51u);
  EXPECT_LT(r.history.back().total, r.history.front().total);
}

TEST(MlpClosedLoop, RejectsPortMismatch) {
  const RobotFleet fleet = robot_benchmark(RobotFleetParams::defaults(3));
  EXPECT_THROW(MlpClosedLoop(fleet.plant, MlpPolicy(ring_mlp(4, 0))), DimensionError);
}
