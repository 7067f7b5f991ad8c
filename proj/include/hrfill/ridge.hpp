#pragma once

#include <Eigen/Dense>

#include "hrfill/dataset.hpp"

namespace hrfill {

/// Ridge fit on standardized features with an unpenalized intercept.
struct RidgeState {
  double intercept = 0.0;               // mean of the training target
  Eigen::VectorXd coefficients;         // on the standardized scale
  Standardizer scaling;

  /// Coefficients and intercept on the original feature scale.
  Eigen::VectorXd raw_coefficients() const;
  double raw_intercept() const;
};

/// Minimizes ||y - Xw - b||^2 + alpha ||w||^2 over standardized X through a
/// Cholesky factorization of (X'X + alpha I). Throws NumericError when the
/// system is singular (alpha = 0 with collinear or constant columns).
RidgeState ridge_solve(const Dataset& data, double alpha);

Eigen::VectorXd ridge_predict(const RidgeState& state, const Eigen::MatrixXd& x);

}  // namespace hrfill
