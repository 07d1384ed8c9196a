#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "strnn/flow.hpp"
#include "strnn/linear_sem.hpp"

namespace strnn {

/// Interventional samples by sequential reconstruction with x_j held at alpha; rows are
/// samples (S x d).
inline Matrix flow_intervene_sample(const AffineFlow& flow, std::size_t j, double alpha, std::size_t S, Rng& rng) {
  if (j >= flow.dim()) throw Error(ErrorCode::InvalidArgument, "intervention target out of range");
  if (S == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  const Pin pin{j, alpha};
  return flow.reconstruct(AffineFlow::standard_normal(flow.dim(), S, rng), std::span<const Pin>(&pin, 1)).transpose();
}

/// Two-pass variant: x = T(z), replace z_j by the noise of (x_<j, alpha), then x = T(z).
inline Matrix flow_intervene_parallel(const AffineFlow& flow, std::size_t j, double alpha, std::size_t S, Rng& rng) {
  if (j >= flow.dim()) throw Error(ErrorCode::InvalidArgument, "intervention target out of range");
  if (S == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  Matrix z = AffineFlow::standard_normal(flow.dim(), S, rng);
  Matrix x = flow.from_noise(z);
  const auto jj = static_cast<Eigen::Index>(j);
  x.row(jj).setConstant(alpha);
  z.row(jj) = flow.to_noise(x).first.row(jj);
  x = flow.from_noise(z);
  x.row(jj).setConstant(alpha);
  return x.transpose();
}

/// Counterfactuals for a batch of observations (columns): abduct z, pin x_j = alpha,
/// keep upstream coordinates at their observed values, rebuild the rest from z.
inline Matrix flow_counterfactual_batch(const AffineFlow& flow, const Matrix& x_obs, std::size_t j, double alpha) {
  if (j >= flow.dim()) throw Error(ErrorCode::InvalidArgument, "intervention target out of range");
  const Matrix z = flow.to_noise(x_obs).first;
  std::vector<char> pinned(flow.dim(), 0);
  Matrix values = x_obs;
  for (std::size_t c = 0; c <= j; ++c) pinned[c] = 1;
  values.row(static_cast<Eigen::Index>(j)).setConstant(alpha);
  return flow.reconstruct(z, pinned, values);
}

inline Vector flow_counterfactual(const AffineFlow& flow, const Vector& x_obs, std::size_t j, double alpha) {
  return flow_counterfactual_batch(flow, Matrix(x_obs), j, alpha).col(0);
}

/// Offsets added to the intervened variable's mean: -m..-1, 1..m for 2m values; an odd
/// count drops the largest positive offset.
inline std::vector<double> intervention_offsets(std::size_t count) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "value_count must be >= 1");
  std::vector<double> v;
  for (int k = 1; v.size() < count; ++k) {
    v.push_back(-k);
    if (v.size() < count) v.push_back(k);
  }
  std::sort(v.begin(), v.end());
  return v;
}

struct QueryError {
  std::size_t target = 0;
  double alpha = 0;
  double squared_error = 0;  // summed over downstream coordinates
};

struct CausalReport {
  double total = 0;
  std::vector<QueryError> queries;
};

inline double causal_denominator(std::size_t values, std::size_t d) {
  return static_cast<double>(values) * static_cast<double>(d) * static_cast<double>(d + 1) / 2.0;
}

struct ImseOptions {
  std::size_t value_count = 8;
  std::size_t samples = 1000;          // flow samples per query
  bool monte_carlo_truth = false;      // estimate ground truth from SEM samples instead
  bool parallel_sampler = false;       // use the two-pass sampler
};

/// Total interventional mean squared error against the SEM's exact interventional means.
/// Each (j, alpha) query draws from its own stream derived from `seed`.
inline CausalReport total_imse(const AffineFlow& flow, const LinearSEM& sem, std::uint64_t seed,
                               const ImseOptions& opt = {}) {
  if (flow.dim() != sem.dim()) throw Error(ErrorCode::DimMismatch, "flow and SEM dimensions differ");
  if (opt.samples == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  const std::size_t d = sem.dim();
  const auto offsets = intervention_offsets(opt.value_count);
  CausalReport rep;
  double sum = 0;
  std::uint64_t query = 0;
  for (std::size_t j = 0; j < d; ++j) {
    const double base = 0.0;  // observational mean of every coordinate of a zero-noise-mean linear SEM
    for (double off : offsets) {
      const double alpha = base + off;
      Rng rng(mix_seed(seed, query++));
      const Matrix xs = opt.parallel_sampler ? flow_intervene_parallel(flow, j, alpha, opt.samples, rng)
                                             : flow_intervene_sample(flow, j, alpha, opt.samples, rng);
      const Vector flow_mean = xs.colwise().mean().transpose();
      Vector truth;
      if (opt.monte_carlo_truth) {
        Rng truth_rng(mix_seed(seed ^ 0x5EEDu, query));
        truth = sem_intervene_sample(sem, j, alpha, opt.samples, truth_rng).colwise().mean().transpose();
      } else {
        truth = sem_intervene_means(sem, j, alpha);
      }
      double err = 0;
      for (std::size_t i = j + 1; i < d; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        err += (truth(ii) - flow_mean(ii)) * (truth(ii) - flow_mean(ii));
      }
      rep.queries.push_back({j, alpha, err});
      sum += err;
    }
  }
  rep.total = sum / causal_denominator(offsets.size(), d);
  return rep;
}

/// Total counterfactual mean squared error over `n_obs` SEM observations.
inline CausalReport total_cmse(const AffineFlow& flow, const LinearSEM& sem, std::uint64_t seed,
                               std::size_t value_count = 8, std::size_t n_obs = 1000) {
  if (flow.dim() != sem.dim()) throw Error(ErrorCode::DimMismatch, "flow and SEM dimensions differ");
  if (n_obs == 0) throw Error(ErrorCode::InvalidArgument, "n_obs must be >= 1");
  const std::size_t d = sem.dim();
  const auto offsets = intervention_offsets(value_count);
  Rng rng(mix_seed(seed, 0xC0FFEEu));
  const Matrix obs = sem_sample(sem, n_obs, rng).transpose();  // d x n_obs
  const Matrix eps = sem.abduct(obs);
  CausalReport rep;
  double sum = 0;
  for (std::size_t j = 0; j < d; ++j) {
    for (double off : offsets) {
      const double alpha = off;
      const Matrix pred = flow_counterfactual_batch(flow, obs, j, alpha);
      // exact counterfactuals for the whole batch: same noise, x_j pinned
      Matrix truth = obs;
      truth.row(static_cast<Eigen::Index>(j)).setConstant(alpha);
      for (auto i = static_cast<Eigen::Index>(j) + 1; i < static_cast<Eigen::Index>(d); ++i) {
        truth.row(i) = sem.weights.row(i).head(i) * truth.topRows(i) + eps.row(i);
      }
      double err = 0;
      for (auto i = static_cast<Eigen::Index>(j) + 1; i < static_cast<Eigen::Index>(d); ++i) {
        err += (pred.row(i) - truth.row(i)).squaredNorm() / static_cast<double>(n_obs);
      }
      rep.queries.push_back({j, alpha, err});
      sum += err;
    }
  }
  rep.total = sum / causal_denominator(offsets.size(), d);
  return rep;
}

}  // namespace strnn
