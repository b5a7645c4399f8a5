#include "disco/graph.hpp"

#include <string>

namespace disco {

namespace {

BoolMatrix bool_product(const BoolMatrix& a, const BoolMatrix& b) {
  const Eigen::Index n = a.rows();
  BoolMatrix out = BoolMatrix::Zero(n, b.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = 0; l < a.cols(); ++l)
      if (a(i, l))
        for (Eigen::Index j = 0; j < b.cols(); ++j)
          if (b(l, j)) out(i, j) = 1;
  return out;
}

}  // namespace

Graph::Graph(BoolMatrix adjacency) : adjacency_(std::move(adjacency)) {
  if (adjacency_.rows() != adjacency_.cols() || adjacency_.rows() == 0)
    throw DimensionError("Graph: adjacency must be square and non-empty");
  for (Eigen::Index i = 0; i < adjacency_.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency_.cols(); ++j)
      if (adjacency_(i, j) > 1)
        throw ValidationError("adjacency entries must be 0 or 1",
                              "adjacency[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    if (adjacency_(i, i) != 1)
      throw ValidationError("adjacency diagonal must be 1",
                            "adjacency[" + std::to_string(i) + "][" + std::to_string(i) + "]");
  }
}

Graph::Graph(const std::vector<std::vector<int>>& rows) : Graph([&] {
    const auto n = static_cast<Eigen::Index>(rows.size());
    BoolMatrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != n)
        throw DimensionError("Graph: adjacency row " + std::to_string(i) + " has wrong length");
      for (Eigen::Index j = 0; j < n; ++j) {
        const int v = rows[i][j];
        if (v != 0 && v != 1)
          throw ValidationError("adjacency entries must be 0 or 1",
                                "adjacency[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        a(i, j) = static_cast<std::uint8_t>(v);
      }
    }
    return a;
  }()) {}

Graph Graph::ring(int nodes) {
  if (nodes < 1) throw ValidationError("ring needs at least one node");
  BoolMatrix a = BoolMatrix::Zero(nodes, nodes);
  for (int i = 0; i < nodes; ++i) {
    a(i, i) = 1;
    a(i, (i + 1) % nodes) = 1;
    a(i, (i + nodes - 1) % nodes) = 1;
  }
  return Graph(a);
}

Graph Graph::complete(int nodes) {
  if (nodes < 1) throw ValidationError("graph needs at least one node");
  return Graph(BoolMatrix::Ones(nodes, nodes));
}

Graph Graph::isolated(int nodes) {
  if (nodes < 1) throw ValidationError("graph needs at least one node");
  BoolMatrix a = BoolMatrix::Zero(nodes, nodes);
  a.diagonal().setOnes();
  return Graph(a);
}

std::vector<std::vector<int>> Graph::rows() const {
  std::vector<std::vector<int>> out(size(), std::vector<int>(size()));
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < size(); ++j) out[i][j] = adjacency_(i, j);
  return out;
}

BoolMatrix Graph::power(int k) const {
  if (k < 0) throw ValidationError("graph power must be non-negative");
  BoolMatrix result = BoolMatrix::Zero(size(), size());
  result.diagonal().setOnes();
  for (int step = 0; step < k; ++step) result = bool_product(result, adjacency_);
  return result;
}

std::vector<int> k_hop_neighbors(const Graph& g, int i, int k) {
  if (i < 0 || i >= g.size())
    throw ValidationError("node index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(g.size()) + ")");
  const BoolMatrix p = g.power(k);
  std::vector<int> out;
  for (int j = 0; j < g.size(); ++j)
    if (p(i, j)) out.push_back(j);
  return out;
}

BlockPattern::BlockPattern(std::vector<int> row_blocks, std::vector<int> col_blocks, BoolMatrix mask)
    : row_blocks_(std::move(row_blocks)), col_blocks_(std::move(col_blocks)), mask_(std::move(mask)) {
  if (mask_.rows() != static_cast<Eigen::Index>(row_blocks_.size()) ||
      mask_.cols() != static_cast<Eigen::Index>(col_blocks_.size()))
    throw DimensionError("BlockPattern: mask shape does not match block lists");
  for (int b : row_blocks_)
    if (b <= 0) throw ValidationError("block heights must be positive");
  for (int b : col_blocks_)
    if (b <= 0) throw ValidationError("block widths must be positive");
  for (Eigen::Index i = 0; i < mask_.size(); ++i)
    if (mask_.data()[i] > 1) throw ValidationError("pattern entries must be 0 or 1");
}

Eigen::MatrixXd BlockPattern::scalar_mask() const {
  const auto ro = block_offsets(row_blocks_);
  const auto co = block_offsets(col_blocks_);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ro.back(), co.back());
  for (int i = 0; i < static_cast<int>(row_blocks_.size()); ++i)
    for (int j = 0; j < static_cast<int>(col_blocks_.size()); ++j)
      if (mask_(i, j)) m.block(ro[i], co[j], row_blocks_[i], col_blocks_[j]).setOnes();
  return m;
}

BlockPattern pattern_from_power(const Graph& g, int k, const std::vector<int>& row_blocks,
                                const std::vector<int>& col_blocks) {
  if (static_cast<int>(row_blocks.size()) != g.size() || static_cast<int>(col_blocks.size()) != g.size())
    throw DimensionError("pattern_from_power: block lists must have one entry per node");
  return BlockPattern(row_blocks, col_blocks, g.power(k));
}

BlockPattern full_pattern(const std::vector<int>& row_blocks, const std::vector<int>& col_blocks) {
  return BlockPattern(row_blocks, col_blocks,
                      BoolMatrix::Ones(static_cast<Eigen::Index>(row_blocks.size()),
                                       static_cast<Eigen::Index>(col_blocks.size())));
}

BlockPattern diagonal_pattern(const std::vector<int>& row_blocks, const std::vector<int>& col_blocks) {
  BoolMatrix m = BoolMatrix::Zero(static_cast<Eigen::Index>(row_blocks.size()),
                                  static_cast<Eigen::Index>(col_blocks.size()));
  for (Eigen::Index i = 0; i < std::min(m.rows(), m.cols()); ++i) m(i, i) = 1;
  return BlockPattern(row_blocks, col_blocks, m);
}

bool conforms(const BlockMatrix& w, const BlockPattern& p) {
  if (w.row_blocks() != p.row_blocks() || w.col_blocks() != p.col_blocks())
    throw DimensionError("conforms: block dimensions of matrix and pattern differ");
  for (int i = 0; i < w.block_rows(); ++i)
    for (int j = 0; j < w.block_cols(); ++j)
      if (!p.allows(i, j) && (w.block(i, j).array() != 0.0).any()) return false;
  return true;
}

}  // namespace disco
