#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <vector>

#include "disco/error.hpp"

namespace disco {

/// Offsets of each block in a list of block sizes, plus the total at the end.
inline std::vector<int> block_offsets(const std::vector<int>& sizes) {
  std::vector<int> offsets(sizes.size() + 1, 0);
  std::partial_sum(sizes.begin(), sizes.end(), offsets.begin() + 1);
  return offsets;
}

inline int block_total(const std::vector<int>& sizes) {
  return std::accumulate(sizes.begin(), sizes.end(), 0);
}

/// Dense matrix partitioned into a grid of blocks. Block (i, j) has
/// row_blocks[i] rows and col_blocks[j] columns.
class BlockMatrix {
 public:
  BlockMatrix() = default;

  BlockMatrix(std::vector<int> row_blocks, std::vector<int> col_blocks)
      : row_blocks_(std::move(row_blocks)), col_blocks_(std::move(col_blocks)) {
    validate_blocks();
    data_ = Eigen::MatrixXd::Zero(block_total(row_blocks_), block_total(col_blocks_));
    init_offsets();
  }

  BlockMatrix(std::vector<int> row_blocks, std::vector<int> col_blocks, Eigen::MatrixXd data)
      : row_blocks_(std::move(row_blocks)), col_blocks_(std::move(col_blocks)), data_(std::move(data)) {
    validate_blocks();
    if (data_.rows() != block_total(row_blocks_) || data_.cols() != block_total(col_blocks_)) {
      throw DimensionError("BlockMatrix: data is " + std::to_string(data_.rows()) + "x" +
                           std::to_string(data_.cols()) + " but blocks sum to " +
                           std::to_string(block_total(row_blocks_)) + "x" +
                           std::to_string(block_total(col_blocks_)));
    }
    init_offsets();
  }

  const std::vector<int>& row_blocks() const { return row_blocks_; }
  const std::vector<int>& col_blocks() const { return col_blocks_; }
  int block_rows() const { return static_cast<int>(row_blocks_.size()); }
  int block_cols() const { return static_cast<int>(col_blocks_.size()); }
  int row_offset(int i) const { return row_offsets_[i]; }
  int col_offset(int j) const { return col_offsets_[j]; }

  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }

  const Eigen::MatrixXd& data() const { return data_; }
  Eigen::MatrixXd& data() { return data_; }

  auto block(int i, int j) {
    return data_.block(row_offsets_[i], col_offsets_[j], row_blocks_[i], col_blocks_[j]);
  }
  auto block(int i, int j) const {
    return data_.block(row_offsets_[i], col_offsets_[j], row_blocks_[i], col_blocks_[j]);
  }

  BlockMatrix transpose() const { return {col_blocks_, row_blocks_, data_.transpose()}; }

 private:
  void validate_blocks() const {
    for (int b : row_blocks_)
      if (b <= 0) throw ValidationError("block heights must be positive");
    for (int b : col_blocks_)
      if (b <= 0) throw ValidationError("block widths must be positive");
  }
  void init_offsets() {
    row_offsets_ = block_offsets(row_blocks_);
    col_offsets_ = block_offsets(col_blocks_);
  }

  std::vector<int> row_blocks_, col_blocks_;
  std::vector<int> row_offsets_{0}, col_offsets_{0};
  Eigen::MatrixXd data_;
};

/// Block-diagonal assembly of square or rectangular blocks.
inline BlockMatrix block_diagonal(const std::vector<Eigen::MatrixXd>& blocks) {
  std::vector<int> rb, cb;
  for (const auto& b : blocks) {
    rb.push_back(static_cast<int>(b.rows()));
    cb.push_back(static_cast<int>(b.cols()));
  }
  BlockMatrix out(rb, cb);
  for (int i = 0; i < static_cast<int>(blocks.size()); ++i) out.block(i, i) = blocks[i];
  return out;
}

}  // namespace disco
