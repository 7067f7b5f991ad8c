#include "hrfill/ridge.hpp"

#include <Eigen/Cholesky>
#include <string>

#include "hrfill/error.hpp"

namespace hrfill {

namespace {
// Reciprocal condition estimate below which the normal system is treated as
// singular.
constexpr double kMinRcond = 1e-13;
}  // namespace

Eigen::VectorXd RidgeState::raw_coefficients() const {
  return coefficients.cwiseQuotient(scaling.scale);
}

double RidgeState::raw_intercept() const { return intercept - raw_coefficients().dot(scaling.mean); }

RidgeState ridge_solve(const Dataset& data, double alpha) {
  if (!(alpha >= 0.0)) throw UsageError("ridge: alpha must be >= 0");
  if (data.rows() < 2) throw DataError("ridge: need at least 2 rows, got " + std::to_string(data.rows()));

  RidgeState state;
  state.scaling = Standardizer::fit(data.x);
  const Eigen::MatrixXd xs = state.scaling.apply(data.x);
  state.intercept = data.y.mean();
  const Eigen::VectorXd yc = data.y.array() - state.intercept;

  const auto p = xs.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(xs.transpose());
  gram.diagonal().array() += alpha;

  Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
    throw NumericError("ridge: normal system is singular (collinear or constant features at alpha=" +
                       std::to_string(alpha) + "); increase alpha");
  }
  state.coefficients = llt.solve(xs.transpose() * yc);
  return state;
}

Eigen::VectorXd ridge_predict(const RidgeState& state, const Eigen::MatrixXd& x) {
  return (state.scaling.apply(x) * state.coefficients).array() + state.intercept;
}

}  // namespace hrfill
