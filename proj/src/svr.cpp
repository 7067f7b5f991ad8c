#include "hrfill/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <string>
#include <unordered_map>
#include <vector>

#include "hrfill/error.hpp"

namespace hrfill {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Kernel rows K(i, .) with a least-recently-used row cache.
class KernelRows {
 public:
  KernelRows(const Eigen::MatrixXd& x, double gamma, std::size_t cache_bytes)
      : x_(x), gamma_(gamma), n_(x.rows()), sq_norms_(x.rowwise().squaredNorm()) {
    const std::size_t row_bytes = sizeof(double) * static_cast<std::size_t>(std::max<Eigen::Index>(n_, 1));
    capacity_ = std::max<std::size_t>(2, cache_bytes / row_bytes);
  }

  const double* row(Eigen::Index i) {
    if (auto it = where_.find(i); it != where_.end()) {
      lru_.splice(lru_.end(), lru_, it->second);
      return it->second->values.data();
    }
    if (lru_.size() >= capacity_) {
      where_.erase(lru_.front().index);
      lru_.pop_front();
    }
    Entry entry{i, std::vector<double>(static_cast<std::size_t>(n_))};
    const Eigen::VectorXd dots = x_ * x_.row(i).transpose();
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double d2 = std::max(0.0, sq_norms_(i) + sq_norms_(j) - 2.0 * dots(j));
      entry.values[static_cast<std::size_t>(j)] = std::exp(-gamma_ * d2);
    }
    entry.values[static_cast<std::size_t>(i)] = 1.0;
    lru_.push_back(std::move(entry));
    where_[i] = std::prev(lru_.end());
    return lru_.back().values.data();
  }

 private:
  struct Entry {
    Eigen::Index index;
    std::vector<double> values;
  };
  const Eigen::MatrixXd& x_;
  double gamma_;
  Eigen::Index n_;
  Eigen::VectorXd sq_norms_;
  std::size_t capacity_;
  std::list<Entry> lru_;
  std::unordered_map<Eigen::Index, std::list<Entry>::iterator> where_;
};

enum class Bound { lower, upper, free };

}  // namespace

double rbf_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b,
                  double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

double default_gamma(const Eigen::MatrixXd& x) {
  const double p = static_cast<double>(std::max<Eigen::Index>(x.cols(), 1));
  if (x.size() == 0) return 1.0 / p;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  return var > 0.0 ? 1.0 / (p * var) : 1.0 / p;
}

SvrSolution solve_svr_dual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params) {
  if (x.rows() != y.size()) throw UsageError("svr: x and y row counts differ");
  if (x.rows() < 2) throw DataError("svr: need at least 2 rows");
  if (!(params.c > 0.0)) throw UsageError("svr: C must be > 0");
  if (!(params.epsilon >= 0.0)) throw UsageError("svr: epsilon must be >= 0");
  if (!(params.gamma > 0.0)) throw UsageError("svr: gamma must be > 0");

  const Eigen::Index n = x.rows();
  const Eigen::Index l = 2 * n;
  const double c = params.c;
  KernelRows kernel(x, params.gamma, params.cache_bytes);

  // Variable t < n is alpha_t (sign +1); t >= n is alpha*_{t-n} (sign -1).
  auto sign = [n](Eigen::Index t) { return t < n ? 1.0 : -1.0; };
  auto sample = [n](Eigen::Index t) { return t < n ? t : t - n; };

  std::vector<double> alpha(static_cast<std::size_t>(l), 0.0);
  std::vector<double> grad(static_cast<std::size_t>(l));
  for (Eigen::Index t = 0; t < n; ++t) {
    grad[static_cast<std::size_t>(t)] = params.epsilon - y(t);
    grad[static_cast<std::size_t>(t + n)] = params.epsilon + y(t);
  }
  auto status = [&](Eigen::Index t) {
    const double a = alpha[static_cast<std::size_t>(t)];
    if (a >= c) return Bound::upper;
    if (a <= 0.0) return Bound::lower;
    return Bound::free;
  };
  // Q(i, t) = s_i s_t K(i, t); the diagonal is 1 for the RBF kernel.
  auto q = [&](const double* krow, Eigen::Index i, Eigen::Index t) {
    return sign(i) * sign(t) * krow[sample(t)];
  };

  SvrSolution solution;
  std::size_t iter = 0;
  double gap = kInf;
  for (;; ++iter) {
    // Working-set selection: maximal violating i, then j by second-order gain.
    double gmax = -kInf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < l; ++t) {
      const double g = grad[static_cast<std::size_t>(t)];
      if (sign(t) > 0) {
        if (status(t) != Bound::upper && -g >= gmax) { gmax = -g; i = t; }
      } else {
        if (status(t) != Bound::lower && g >= gmax) { gmax = g; i = t; }
      }
    }
    double gmax2 = -kInf;
    Eigen::Index j = -1;
    double best = kInf;
    const double* ki = i >= 0 ? kernel.row(sample(i)) : nullptr;
    for (Eigen::Index t = 0; ki != nullptr && t < l; ++t) {
      const double g = grad[static_cast<std::size_t>(t)];
      if (sign(t) > 0) {
        if (status(t) == Bound::lower) continue;
        gmax2 = std::max(gmax2, g);
        const double diff = gmax + g;
        if (diff > 0.0) {
          double quad = 2.0 - 2.0 * sign(i) * q(ki, i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) { best = obj; j = t; }
        }
      } else {
        if (status(t) == Bound::upper) continue;
        gmax2 = std::max(gmax2, -g);
        const double diff = gmax - g;
        if (diff > 0.0) {
          double quad = 2.0 + 2.0 * sign(i) * q(ki, i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) { best = obj; j = t; }
        }
      }
    }
    gap = gmax + gmax2;
    if (gap < params.tolerance || j < 0) break;
    if (iter >= params.max_iterations) {
      throw NumericError("svr: SMO did not converge in " + std::to_string(params.max_iterations) +
                         " iterations; residual KKT violation " + std::to_string(gap));
    }

    ki = kernel.row(sample(i));
    const double* kj = kernel.row(sample(j));
    const double qij = q(ki, i, j);
    auto& ai = alpha[static_cast<std::size_t>(i)];
    auto& aj = alpha[static_cast<std::size_t>(j)];
    const double gi = grad[static_cast<std::size_t>(i)];
    const double gj = grad[static_cast<std::size_t>(j)];
    const double old_ai = ai;
    const double old_aj = aj;

    if (sign(i) != sign(j)) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-gi - gj) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > 0.0) {
        if (ai > c) { ai = c; aj = c - diff; }
      } else {
        if (aj > c) { aj = c; ai = c + diff; }
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (gi - gj) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) { ai = c; aj = sum - c; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > c) {
        if (aj > c) { aj = c; ai = sum - c; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }

    const double dai = ai - old_ai;
    const double daj = aj - old_aj;
    const double si = sign(i);
    const double sj = sign(j);
    for (Eigen::Index t = 0; t < l; ++t) {
      const auto st = static_cast<std::size_t>(t);
      const double kt_i = ki[sample(t)];
      const double kt_j = kj[sample(t)];
      grad[st] += sign(t) * (si * kt_i * dai + sj * kt_j * daj);
    }
  }

  // Bias from the KKT conditions: average over free variables, else the
  // midpoint of the feasible interval.
  double ub = kInf;
  double lb = -kInf;
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (Eigen::Index t = 0; t < l; ++t) {
    const double yg = sign(t) * grad[static_cast<std::size_t>(t)];
    switch (status(t)) {
      case Bound::upper:
        if (sign(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        break;
      case Bound::lower:
        if (sign(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        break;
      case Bound::free:
        free_sum += yg;
        ++free_count;
        break;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  solution.beta.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    solution.beta(t) = alpha[static_cast<std::size_t>(t)] - alpha[static_cast<std::size_t>(t + n)];
  }
  solution.bias = -rho;
  solution.iterations = iter;
  solution.kkt_gap = gap;
  return solution;
}

SvrState svr_train(const Dataset& data, SvrParams params, bool use_default_gamma) {
  if (data.rows() < 2) throw DataError("svr: need at least 2 rows, got " + std::to_string(data.rows()));
  SvrState state;
  state.scaling = Standardizer::fit(data.x);
  const Eigen::MatrixXd xs = state.scaling.apply(data.x);
  if (use_default_gamma) params.gamma = default_gamma(xs);

  const SvrSolution sol = solve_svr_dual(xs, data.y, params);
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < sol.beta.size(); ++i) {
    if (sol.beta(i) != 0.0) support.push_back(i);
  }
  state.support_vectors.resize(static_cast<Eigen::Index>(support.size()), xs.cols());
  state.dual_coef.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    state.support_vectors.row(row) = xs.row(support[k]);
    state.dual_coef(row) = sol.beta(support[k]);
  }
  state.bias = sol.bias;
  state.gamma = params.gamma;
  state.iterations = sol.iterations;
  state.kkt_gap = sol.kkt_gap;
  return state;
}

Eigen::VectorXd svr_predict(const SvrState& state, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd xs = state.scaling.apply(x);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(xs.rows(), state.bias);
  if (state.support_vectors.rows() == 0) return out;
  const Eigen::VectorXd sv_norms = state.support_vectors.rowwise().squaredNorm();
  constexpr Eigen::Index kBlock = 512;
  for (Eigen::Index start = 0; start < xs.rows(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, xs.rows() - start);
    const auto block = xs.middleRows(start, len);
    const Eigen::VectorXd norms = block.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * block * state.support_vectors.transpose();
    d2.colwise() += norms;
    d2.rowwise() += sv_norms.transpose();
    const Eigen::MatrixXd k = (-state.gamma * d2.array().max(0.0)).exp().matrix();
    out.segment(start, len).array() += (k * state.dual_coef).array();
  }
  return out;
}

}  // namespace hrfill
