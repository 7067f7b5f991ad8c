#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "hrfill/dataset.hpp"

namespace hrfill {

struct SvrParams {
  double c = 1.0;           // box constraint
  double epsilon = 0.1;     // tube half-width, target units
  double gamma = 1.0;       // RBF width: k(a, b) = exp(-gamma |a - b|^2)
  double tolerance = 1e-3;  // stop when the maximal KKT violation drops below this
  std::size_t max_iterations = 10'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
};

double rbf_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b,
                  double gamma);

/// 1 / (n_features * variance of all entries of x); 1 / n_features when x has
/// no spread at all.
double default_gamma(const Eigen::MatrixXd& x);

/// Solution of the epsilon-SVR dual
///   min 1/2 b'Kb - y'b + eps |b|_1   s.t.  sum(b) = 0,  -C <= b_i <= C
/// with b = alpha - alpha*. The decision function is sum_i b_i k(x_i, x) + bias.
struct SvrSolution {
  Eigen::VectorXd beta;
  double bias = 0.0;
  std::size_t iterations = 0;
  double kkt_gap = 0.0;  // maximal violation at termination
};

/// Sequential minimal optimization with second-order working-set selection
/// on the 2n-variable form of the dual. `x` is used as given (no scaling).
/// Throws NumericError if the KKT gap is still above tolerance after
/// max_iterations.
SvrSolution solve_svr_dual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params);

struct SvrState {
  Eigen::MatrixXd support_vectors;  // standardized feature space
  Eigen::VectorXd dual_coef;        // alpha - alpha*, each in [-C, C]
  double bias = 0.0;
  double gamma = 1.0;
  Standardizer scaling;
  std::size_t iterations = 0;
  double kkt_gap = 0.0;
};

/// Standardizes features, picks gamma (default_gamma unless given) and keeps
/// only rows with a nonzero dual coefficient.
SvrState svr_train(const Dataset& data, SvrParams params, bool use_default_gamma);

Eigen::VectorXd svr_predict(const SvrState& state, const Eigen::MatrixXd& x);

}  // namespace hrfill
