#pragma once

#include <cmath>
#include <random>

#include "strnn/adjacency.hpp"
#include "strnn/error.hpp"
#include "strnn/mlp.hpp"
#include "strnn/types.hpp"

namespace strnn {

/// x_i = sum_{j<i} w_ij x_j + eps_i with eps ~ N(0, I). Indices are 0-based.
struct LinearSEM {
  Matrix weights;

  std::size_t dim() const { return static_cast<std::size_t>(weights.rows()); }

  AdjacencyMatrix adjacency() const { return AdjacencyMatrix((weights.array() != 0.0).cast<std::int64_t>().matrix()); }

  void validate() const {
    if (weights.rows() == 0 || weights.rows() != weights.cols()) {
      throw Error(ErrorCode::InvalidDim, "SEM weights must be a non-empty square matrix");
    }
    for (Eigen::Index i = 0; i < weights.rows(); ++i) {
      for (Eigen::Index j = i; j < weights.cols(); ++j) {
        if (weights(i, j) != 0.0) throw Error(ErrorCode::UpperTriangleNonZero, "SEM weights must be strictly lower triangular");
      }
    }
    if (!weights.allFinite()) throw Error(ErrorCode::NonFiniteInput, "SEM weights are not finite");
  }

  /// Pushes noise through the equations; columns are samples.
  Matrix propagate(const Matrix& eps) const {
    Matrix x(eps.rows(), eps.cols());
    for (Eigen::Index i = 0; i < eps.rows(); ++i) {
      x.row(i) = eps.row(i) + weights.row(i).head(i) * x.topRows(i);
    }
    return x;
  }

  /// eps = x - W x; columns are samples.
  Matrix abduct(const Matrix& x) const { return x - weights * x; }

  Matrix covariance() const {
    const auto d = weights.rows();
    const Matrix inv = (Matrix::Identity(d, d) - weights).triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
    return inv * inv.transpose();
  }
};

/// Lower-triangle entries ~ Uniform(-2, 2), zeroed when |w| < cutoff; drawn row by row.
inline LinearSEM gen_linear_sem(std::size_t d, double cutoff, Rng& rng) {
  AdjacencyMatrix::check_dim(d);
  if (!(cutoff >= 0.0 && cutoff <= 2.0)) throw Error(ErrorCode::InvalidThreshold, "cutoff must lie in [0, 2]");
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  LinearSEM sem{Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))};
  for (Eigen::Index i = 0; i < sem.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double w = unif(rng);
      if (std::abs(w) >= cutoff) sem.weights(i, j) = w;
    }
  }
  return sem;
}

inline Matrix standard_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> g;
  Matrix z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = g(rng);
  }
  return z;
}

/// Ancestral sampling; rows are samples (n x d).
inline Matrix sem_sample(const LinearSEM& sem, std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  return sem.propagate(standard_normal_matrix(sem.dim(), n, rng)).transpose();
}

/// Samples under do(x_j = alpha); rows are samples.
inline Matrix sem_intervene_sample(const LinearSEM& sem, std::size_t j, double alpha, std::size_t n, Rng& rng) {
  if (j >= sem.dim()) throw Error(ErrorCode::InvalidArgument, "intervention target out of range");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  const Matrix eps = standard_normal_matrix(sem.dim(), n, rng);
  Matrix x(eps.rows(), eps.cols());
  for (Eigen::Index i = 0; i < eps.rows(); ++i) {
    if (static_cast<std::size_t>(i) == j) {
      x.row(i).setConstant(alpha);
    } else {
      x.row(i) = eps.row(i) + sem.weights.row(i).head(i) * x.topRows(i);
    }
  }
  return x.transpose();
}

/// Means of every coordinate under do(x_j = alpha): upstream coordinates keep their
/// observational mean 0, downstream means follow by forward substitution.
inline Vector sem_intervene_means(const LinearSEM& sem, std::size_t j, double alpha) {
  if (j >= sem.dim()) throw Error(ErrorCode::InvalidArgument, "intervention target out of range");
  Vector m = Vector::Zero(static_cast<Eigen::Index>(sem.dim()));
  m(static_cast<Eigen::Index>(j)) = alpha;
  for (auto i = static_cast<Eigen::Index>(j) + 1; i < m.size(); ++i) m(i) = sem.weights.row(i).head(i).dot(m.head(i));
  return m;
}

/// E[x_i | do(x_j = alpha)] for a downstream i > j.
inline double sem_intervene_mean(const LinearSEM& sem, std::size_t j, double alpha, std::size_t i) {
  if (i <= j || i >= sem.dim()) {
    throw Error(ErrorCode::InvalidPair, "need j < i < d, got j=" + std::to_string(j) + " i=" + std::to_string(i));
  }
  return sem_intervene_means(sem, j, alpha)(static_cast<Eigen::Index>(i));
}

/// Abduct eps from x_obs, set x_j = alpha, re-propagate downstream with the same eps.
inline Vector sem_counterfactual(const LinearSEM& sem, const Vector& x_obs, std::size_t j, double alpha) {
  if (static_cast<std::size_t>(x_obs.size()) != sem.dim()) throw Error(ErrorCode::DimMismatch, "observation has the wrong length");
  if (j >= sem.dim()) throw Error(ErrorCode::InvalidArgument, "intervention target out of range");
  if (!x_obs.allFinite()) throw Error(ErrorCode::NonFiniteInput, "observation is not finite");
  const Vector eps = x_obs - sem.weights * x_obs;
  Vector x = x_obs;
  x(static_cast<Eigen::Index>(j)) = alpha;
  for (auto i = static_cast<Eigen::Index>(j) + 1; i < x.size(); ++i) x(i) = sem.weights.row(i).head(i).dot(x.head(i)) + eps(i);
  return x;
}

/// Exact per-sample NLL of the SEM's joint Gaussian (unit-triangular Jacobian, so the
/// density is that of the abducted noise). Columns are samples.
inline Vector sem_nll(const LinearSEM& sem, const Matrix& x) {
  const Matrix eps = sem.abduct(x);
  return (0.5 * eps.colwise().squaredNorm().transpose().array() + static_cast<double>(sem.dim()) * kHalfLog2Pi).matrix();
}

}  // namespace strnn
