#pragma once

#include <vector>

#include <Eigen/Dense>

#include "disco/block_matrix.hpp"
#include "disco/graph.hpp"

namespace disco {

/// J = A - A^T, computed elementwise so J(i,j) == -J(j,i) exactly.
BlockMatrix make_skew(const BlockMatrix& a);
Eigen::MatrixXd make_skew(const Eigen::MatrixXd& a);

/// Block-diagonal matrix with blocks L_i * L_i^T.
BlockMatrix make_psd_blockdiag(const std::vector<Eigen::MatrixXd>& factors);

/// Zeroes every block sitting at a zero position of the pattern.
BlockMatrix mask_apply(const BlockMatrix& w, const BlockPattern& p);

struct PowerIterationOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 10000;
};

/// Largest singular value by power iteration on W^T W. When `warm_start` is
/// non-null it seeds the iteration and receives the final right singular
/// vector estimate.
double spectral_norm(const Eigen::MatrixXd& w, const PowerIterationOptions& opts = {},
                     Eigen::VectorXd* warm_start = nullptr);
double spectral_norm(const BlockMatrix& w, const PowerIterationOptions& opts = {});

}  // namespace disco
