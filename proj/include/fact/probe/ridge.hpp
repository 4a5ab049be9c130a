#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fact/errors.hpp"

namespace fact::probe {

struct RidgeModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  /// Set when lambda = 0 met a singular system and the minimum-norm
  /// solution was taken instead of a normal-equations solve.
  bool min_norm_fallback = false;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    return (X * weights).array() + intercept;
  }
};

/// Ridge regression minimizing ||y - Xw - b||^2 + lambda ||w||^2 with an
/// unpenalized intercept, solved in closed form on centered data.
inline RidgeModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            double lambda) {
  if (X.rows() != y.size())
    throw validation_error("ridge_fit: X and y row counts differ");
  if (X.rows() < 2)
    throw validation_error("ridge_fit: need at least two rows");
  if (lambda < 0.0)
    throw validation_error("ridge_fit: lambda must be nonnegative");

  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  RidgeModel model;
  Eigen::MatrixXd gram = Xc.transpose() * Xc;
  gram.diagonal().array() += lambda;

  if (lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible()) {
      // Singular at lambda = 0: minimum-norm least squares via SVD.
      model.weights = Xc.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                          .solve(yc);
      model.min_norm_fallback = true;
      model.intercept = y_mean - x_mean.dot(model.weights);
      return model;
    }
    model.weights = lu.solve(Xc.transpose() * yc);
  } else {
    model.weights = gram.ldlt().solve(Xc.transpose() * yc);
  }
  model.intercept = y_mean - x_mean.dot(model.weights);
  return model;
}

/// The nine-value regularization grid searched by the ensemble.
inline const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid = {0.0001, 0.001, 0.01, 0.1, 1.0,
                                           2.0,    5.0,   10.0, 100.0};
  return grid;
}

}  // namespace fact::probe
