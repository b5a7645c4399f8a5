#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "disco/error.hpp"
#include "disco/graph.hpp"

using namespace disco;

namespace {

// Hop distances by breadth-first search, independent of matrix powers.
std::vector<int> bfs_distances(const Graph& g, int src) {
  std::vector<int> dist(g.size(), -1);
  std::queue<int> q;
  dist[src] = 0;
  q.push(src);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v = 0; v < g.size(); ++v)
      if (g.edge(u, v) && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  return dist;
}

std::vector<int> within(const Graph& g, int i, int k) {
  std::vector<int> out;
  const auto d = bfs_distances(g, i);
  for (int j = 0; j < g.size(); ++j)
    if (d[j] >= 0 && d[j] <= k) out.push_back(j);
  return out;
}

}  // namespace

TEST(KHopNeighbors, RingOneHop) {
  // nodes 12, 1, 2 in one-based numbering
  EXPECT_EQ(k_hop_neighbors(Graph::ring(12), 0, 1), (std::vector<int>{0, 1, 11}));
}

TEST(KHopNeighbors, ZeroHopsIsSelf) {
  EXPECT_EQ(k_hop_neighbors(Graph::ring(12), 5, 0), std::vector<int>{5});
  EXPECT_EQ(k_hop_neighbors(Graph::complete(4), 2, 0), std::vector<int>{2});
}

TEST(KHopNeighbors, RingTwoHops) {
  // nodes 11, 12, 1, 2, 3 in one-based numbering
  EXPECT_EQ(k_hop_neighbors(Graph::ring(12), 0, 2), (std::vector<int>{0, 1, 2, 10, 11}));
}

TEST(KHopNeighbors, MatchesBreadthFirstSearchOnRandomGraphs) {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(0.2);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3 + trial % 8;
    BoolMatrix a = BoolMatrix::Identity(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j && coin(rng)) a(i, j) = 1;
    const Graph g(a);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k <= m; ++k) EXPECT_EQ(k_hop_neighbors(g, i, k), within(g, i, k));
  }
}

TEST(KHopNeighbors, RejectsBadArguments) {
  EXPECT_THROW(k_hop_neighbors(Graph::ring(4), 4, 1), ValidationError);
  EXPECT_THROW(k_hop_neighbors(Graph::ring(4), 0, -1), ValidationError);
}

TEST(Graph, RejectsMissingSelfLoopAndBadShape) {
  BoolMatrix a = BoolMatrix::Ones(3, 3);
  a(1, 1) = 0;
  EXPECT_THROW(Graph{a}, ValidationError);
  EXPECT_THROW(Graph(std::vector<std::vector<int>>{{1, 0}, {1}}), DimensionError);
}

TEST(PatternFromPower, RingOneHopIsTridiagonalWithCorners) {
  const BlockPattern p = pattern_from_power(Graph::ring(12), 1, std::vector<int>(12, 1), std::vector<int>(12, 1));
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      const int d = std::abs(i - j);
      EXPECT_EQ(p.allows(i, j), d <= 1 || d == 11) << i << "," << j;
    }
}

TEST(PatternFromPower, CompleteGraphIsAllOnes) {
  for (int k = 1; k <= 3; ++k) {
    const BlockPattern p = pattern_from_power(Graph::complete(5), k, {1, 2, 1, 3, 1}, {2, 2, 2, 2, 2});
    EXPECT_EQ(p.mask().cast<int>().sum(), 25);
    EXPECT_TRUE((p.scalar_mask().array() == 1.0).all());
  }
}

TEST(PatternFromPower, RingSixHopsCoversTwelveNodes) {
  const BlockPattern p = pattern_from_power(Graph::ring(12), 6, std::vector<int>(12, 4), std::vector<int>(12, 2));
  EXPECT_EQ(p.mask().cast<int>().sum(), 144);
  const BlockPattern p5 = pattern_from_power(Graph::ring(12), 5, std::vector<int>(12, 4), std::vector<int>(12, 2));
  EXPECT_LT(p5.mask().cast<int>().sum(), 144);
}

TEST(PatternFromPower, ScalarMaskExpandsBlocks) {
  const BlockPattern p = pattern_from_power(Graph::ring(3), 0, {2, 1, 1}, {1, 3, 1});
  const Eigen::MatrixXd s = p.scalar_mask();
  ASSERT_EQ(s.rows(), 4);
  ASSERT_EQ(s.cols(), 5);
  EXPECT_EQ(s.sum(), 2 * 1 + 1 * 3 + 1 * 1);
  EXPECT_EQ(s.block(0, 0, 2, 1).sum(), 2);
  EXPECT_EQ(s.block(2, 1, 1, 3).sum(), 3);
}

TEST(Conforms, ZeroMatrixAlwaysConforms) {
  const BlockPattern p = diagonal_pattern({2, 2}, {2, 2});
  EXPECT_TRUE(conforms(BlockMatrix({2, 2}, {2, 2}), p));
}

TEST(Conforms, BlockDiagonalConformsToDiagonal) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  BlockMatrix w({2, 3}, {2, 3});
  for (int i = 0; i < 2; ++i)
    for (int r = 0; r < w.block(i, i).rows(); ++r)
      for (int c = 0; c < w.block(i, i).cols(); ++c) w.block(i, i)(r, c) = n(rng);
  EXPECT_TRUE(conforms(w, diagonal_pattern({2, 3}, {2, 3})));
}

TEST(Conforms, DenseMatrixViolatesRing) {
  const std::vector<int> b(12, 2);
  BlockMatrix w(b, b, Eigen::MatrixXd::Random(24, 24));
  EXPECT_FALSE(conforms(w, pattern_from_power(Graph::ring(12), 1, b, b)));
  EXPECT_TRUE(conforms(w, full_pattern(b, b)));
}

TEST(Conforms, ShapeMismatchThrows) {
  EXPECT_THROW(conforms(BlockMatrix({2}, {2}), diagonal_pattern({1, 1}, {2})), DimensionError);
}
