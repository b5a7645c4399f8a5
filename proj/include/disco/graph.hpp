#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "disco/block_matrix.hpp"

namespace disco {

using BoolMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Undirected-or-directed graph on M nodes given by a 0/1 adjacency matrix
/// with unit diagonal (every node is its own neighbor). Nodes are 0-based.
class Graph {
 public:
  explicit Graph(BoolMatrix adjacency);
  explicit Graph(const std::vector<std::vector<int>>& adjacency_rows);

  /// Cycle i - (i+1 mod M) with self loops.
  static Graph ring(int nodes);
  static Graph complete(int nodes);
  /// Self loops only.
  static Graph isolated(int nodes);

  int size() const { return static_cast<int>(adjacency_.rows()); }
  bool edge(int i, int j) const { return adjacency_(i, j) != 0; }
  const BoolMatrix& adjacency() const { return adjacency_; }
  std::vector<std::vector<int>> rows() const;

  /// Nonzero pattern of adjacency^k; the zeroth power is the identity.
  BoolMatrix power(int k) const;

 private:
  BoolMatrix adjacency_;
};

/// Sorted 0-based indices j with (adjacency^k)(i, j) != 0.
std::vector<int> k_hop_neighbors(const Graph& g, int i, int k);

/// Block-level sparsity pattern. Mask entry (i, j) = 0 forces block (i, j)
/// of a conforming matrix to be zero.
class BlockPattern {
 public:
  BlockPattern(std::vector<int> row_blocks, std::vector<int> col_blocks, BoolMatrix mask);

  const std::vector<int>& row_blocks() const { return row_blocks_; }
  const std::vector<int>& col_blocks() const { return col_blocks_; }
  const BoolMatrix& mask() const { return mask_; }
  bool allows(int i, int j) const { return mask_(i, j) != 0; }

  /// Per-scalar 0/1 expansion of the block mask.
  Eigen::MatrixXd scalar_mask() const;

 private:
  std::vector<int> row_blocks_, col_blocks_;
  BoolMatrix mask_;
};

/// Pattern of blkSparse(adjacency^k) for the given block partition.
BlockPattern pattern_from_power(const Graph& g, int k, const std::vector<int>& row_blocks,
                                const std::vector<int>& col_blocks);

/// All-ones or identity patterns over the given partition.
BlockPattern full_pattern(const std::vector<int>& row_blocks, const std::vector<int>& col_blocks);
BlockPattern diagonal_pattern(const std::vector<int>& row_blocks, const std::vector<int>& col_blocks);

/// True iff every block of `w` at a zero mask position is exactly zero.
bool conforms(const BlockMatrix& w, const BlockPattern& p);

}  // namespace disco
