#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "fact/errors.hpp"

namespace fact::probe {

struct CcaResult {
  /// Canonical correlations, nonincreasing, clipped to [0, 1].
  std::vector<double> correlations;
  /// Projection matrices: columns project centered X / Y onto variates.
  Eigen::MatrixXd A, B;
  /// Components supported by the ranks of both covariances.
  std::size_t valid_components = 0;
};

/// Canonical correlation analysis by whitening both covariance matrices
/// (ridge-regularized by eps * I) and taking the SVD of the whitened
/// cross-covariance. Rank deficiency beyond the regularization shrinks the
/// number of valid components, which is reported.
inline CcaResult cca(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                     std::size_t k, double eps = 1e-8) {
  if (X.rows() != Y.rows())
    throw validation_error("cca: X and Y row counts differ");
  if (X.rows() < 2) throw validation_error("cca: need at least two rows");
  if (k > static_cast<std::size_t>(std::min(X.cols(), Y.cols())))
    throw validation_error("cca: k exceeds min(p, q)");

  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd Yc = Y.rowwise() - Y.colwise().mean();
  const Eigen::MatrixXd Sxx = Xc.transpose() * Xc / n;
  const Eigen::MatrixXd Syy = Yc.transpose() * Yc / n;
  const Eigen::MatrixXd Sxy = Xc.transpose() * Yc / n;

  // Inverse square root with an effective-rank count. Eigenvalues are
  // floored at eps (rather than uniformly shifted) so well-conditioned
  // directions whiten exactly while degenerate ones stay bounded.
  auto inv_sqrt = [eps](const Eigen::MatrixXd& S, std::size_t& rank) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double tol = std::max(eps * 10.0, ev.maxCoeff() * 1e-12);
    Eigen::VectorXd inv(ev.size());
    rank = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev[i] > tol) {
        inv[i] = 1.0 / std::sqrt(std::max(ev[i], eps));
        ++rank;
      } else {
        inv[i] = 0.0;
      }
    }
    return Eigen::MatrixXd(es.eigenvectors() * inv.asDiagonal() *
                           es.eigenvectors().transpose());
  };

  std::size_t rank_x = 0, rank_y = 0;
  const Eigen::MatrixXd Wx = inv_sqrt(Sxx, rank_x);
  const Eigen::MatrixXd Wy = inv_sqrt(Syy, rank_y);
  const std::size_t valid = std::min({rank_x, rank_y, k});
  if (valid == 0)
    throw numeric_error("cca: rank-deficient input (a constant matrix?)");

  const Eigen::MatrixXd M = Wx * Sxy * Wy;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);

  CcaResult result;
  result.valid_components = valid;
  const auto kk = static_cast<Eigen::Index>(std::min<std::size_t>(k, valid));
  result.A = Wx * svd.matrixU().leftCols(kk);
  result.B = Wy * svd.matrixV().leftCols(kk);
  for (Eigen::Index i = 0; i < kk; ++i)
    result.correlations.push_back(
        std::clamp(svd.singularValues()[i], 0.0, 1.0));
  return result;
}

}  // namespace fact::probe
