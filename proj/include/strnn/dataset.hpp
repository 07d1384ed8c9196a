#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strnn/error.hpp"
#include "strnn/types.hpp"

namespace strnn {

enum class DataKind { Binary, Real };

inline std::string_view to_string(DataKind k) { return k == DataKind::Binary ? "binary" : "real"; }

inline DataKind parse_data_kind(std::string_view s) {
  if (s == "binary") return DataKind::Binary;
  if (s == "real") return DataKind::Real;
  throw Error(ErrorCode::InvalidArgument, "unknown data kind '" + std::string(s) + "'");
}

struct Split {
  std::vector<std::size_t> train, val, test;
};

struct SplitRatios {
  double train = 0.6, val = 0.2, test = 0.2;

  void validate() const {
    if (!(train > 0 && val > 0 && test > 0) || std::abs(train + val + test - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "split ratios must be positive and sum to 1");
    }
  }
};

/// Samples are rows (n x d).
struct Dataset {
  Matrix samples;
  DataKind kind = DataKind::Real;
  Split split;

  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }

  void validate() const {
    if (kind == DataKind::Binary &&
        !((samples.array() == 0.0) || (samples.array() == 1.0)).all()) {
      throw Error(ErrorCode::NonBinaryInput, "binary dataset holds a value other than 0/1");
    }
    if (!samples.allFinite()) throw Error(ErrorCode::NonFiniteInput, "dataset holds a non-finite value");
    std::vector<char> seen(size(), 0);
    for (const auto* part : {&split.train, &split.val, &split.test}) {
      for (auto i : *part) {
        if (i >= size() || seen[i]) throw Error(ErrorCode::InvalidArgument, "split is not a partition");
        seen[i] = 1;
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw Error(ErrorCode::InvalidArgument, "split does not cover every sample");
    }
  }
};

/// Seeded shuffle, then contiguous train/val/test blocks.
inline Split make_split(std::size_t n, const SplitRatios& ratios, Rng& rng) {
  ratios.validate();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(n)));
  auto n_val = static_cast<std::size_t>(std::llround(ratios.val * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return s;
}

inline void split(Dataset& data, const SplitRatios& ratios, Rng& rng) {
  data.split = make_split(data.size(), ratios, rng);
}

/// Selected rows of `samples` as columns (d x |idx|), the layout networks consume.
inline Matrix gather_columns(const Matrix& samples, std::span<const std::size_t> idx) {
  Matrix out(samples.cols(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = samples.row(static_cast<Eigen::Index>(idx[k])).transpose();
  }
  return out;
}

/// Per-feature mean and standard deviation over the given rows; zero spread maps to 1.
inline std::pair<Vector, Vector> feature_moments(const Matrix& samples, std::span<const std::size_t> rows) {
  const Matrix cols = gather_columns(samples, rows);
  Vector loc = cols.rowwise().mean();
  Vector scale = ((cols.colwise() - loc).array().square().rowwise().mean()).sqrt().matrix();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale(i) > 1e-12)) scale(i) = 1.0;
  }
  return {loc, scale};
}

struct MeanWithError {
  double mean = 0;
  double std_error = 0;  // sample sd / sqrt(n)
};

inline MeanWithError mean_with_stderr(const Vector& v) {
  MeanWithError r;
  const auto n = static_cast<double>(v.size());
  if (v.size() == 0) return r;
  r.mean = v.mean();
  if (v.size() > 1) {
    const double var = (v.array() - r.mean).square().sum() / (n - 1.0);
    r.std_error = std::sqrt(var / n);
  }
  return r;
}

}  // namespace strnn
