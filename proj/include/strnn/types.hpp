#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace strnn {

/// Row-major integer matrix used for adjacencies, masks and mask products.
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// All randomness flows through explicitly passed engines of this type.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent stream seeds from (seed, tag).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline bool is_binary(const IntMatrix& m) {
  return ((m.array() == 0) || (m.array() == 1)).all();
}

}  // namespace strnn
