#include "disco/blocklin.hpp"

#include <cmath>

namespace disco {

Eigen::MatrixXd make_skew(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DimensionError("make_skew: matrix must be square");
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd j(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) j(r, c) = a(r, c) - a(c, r);
  return j;
}

BlockMatrix make_skew(const BlockMatrix& a) {
  if (a.row_blocks() != a.col_blocks()) throw DimensionError("make_skew: block matrix must be square");
  return {a.row_blocks(), a.col_blocks(), make_skew(a.data())};
}

BlockMatrix make_psd_blockdiag(const std::vector<Eigen::MatrixXd>& factors) {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(factors.size());
  for (const auto& l : factors) {
    if (l.rows() != l.cols()) throw DimensionError("make_psd_blockdiag: factors must be square");
    Eigen::MatrixXd b = l * l.transpose();
    // symmetrize exactly; the product above is symmetric only up to rounding
    b = (0.5 * (b + b.transpose())).eval();
    blocks.push_back(std::move(b));
  }
  return block_diagonal(blocks);
}

BlockMatrix mask_apply(const BlockMatrix& w, const BlockPattern& p) {
  if (w.row_blocks() != p.row_blocks() || w.col_blocks() != p.col_blocks())
    throw DimensionError("mask_apply: block dimensions of matrix and pattern differ");
  BlockMatrix out = w;
  for (int i = 0; i < w.block_rows(); ++i)
    for (int j = 0; j < w.block_cols(); ++j)
      if (!p.allows(i, j)) out.block(i, j).setZero();
  return out;
}

double spectral_norm(const Eigen::MatrixXd& w, const PowerIterationOptions& opts, Eigen::VectorXd* warm_start) {
  const Eigen::Index n = w.cols();
  if (n == 0 || w.rows() == 0) return 0.0;
  if (w.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  Eigen::VectorXd v;
  if (warm_start != nullptr && warm_start->size() == n && warm_start->norm() > 0.0) {
    v = *warm_start;
  } else {
    v.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::cos(1.7 * static_cast<double>(i));
  }
  v.normalize();

  Eigen::VectorXd wv = w * v;
  if (wv.squaredNorm() == 0.0) {
    // start vector in the null space: restart from the heaviest column
    Eigen::Index col = 0;
    w.colwise().squaredNorm().maxCoeff(&col);
    v.setZero();
    v(col) = 1.0;
    wv = w * v;
  }
  double sigma = wv.norm();
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::VectorXd z = w.transpose() * wv;
    const double zn = z.norm();
    if (zn == 0.0) break;
    v = z / zn;
    wv = w * v;
    const double next = wv.norm();
    const bool done = std::abs(next - sigma) <= opts.relative_tolerance * next;
    sigma = next;
    if (done) break;
  }
  if (warm_start != nullptr) *warm_start = v;
  return sigma;
}

double spectral_norm(const BlockMatrix& w, const PowerIterationOptions& opts) {
  return spectral_norm(w.data(), opts);
}

}  // namespace disco
