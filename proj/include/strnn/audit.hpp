#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "strnn/mlp.hpp"
#include "strnn/types.hpp"

namespace strnn {

struct Violation {
  std::size_t output = 0;  // variable index (output row modulo the block size)
  std::size_t input = 0;
  double magnitude = 0;    // largest observed |change| of the output
};

struct AuditOptions {
  std::size_t points = 16;       // random base inputs
  std::size_t perturbations = 4; // replacement values per input coordinate
  double scale = 3.0;            // spread of base inputs and replacements
  bool binary_inputs = false;    // draw 0/1 inputs and flip instead of resampling
};

/// Perturbation audit of a batched map f: (in x B) -> (out x B). For every pair (i, j)
/// with allowed(i, j) == 0, each output row o with o % allowed.rows() == i must stay
/// exactly unchanged when input j alone is changed. Pairs are reported once with the
/// largest magnitude seen.
template <class F>
std::vector<Violation> perturbation_audit(F&& f, const IntMatrix& allowed, Rng& rng,
                                          const AuditOptions& opt = {}) {
  const Eigen::Index n_in = allowed.cols(), d_out = allowed.rows();
  const auto pts = static_cast<Eigen::Index>(opt.points);
  std::normal_distribution<double> normal(0.0, opt.scale);
  std::bernoulli_distribution coin(0.5);
  Matrix base(n_in, pts);
  for (Eigen::Index c = 0; c < pts; ++c) {
    for (Eigen::Index r = 0; r < n_in; ++r) base(r, c) = opt.binary_inputs ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
  }
  const Matrix y0 = f(base);
  std::vector<Violation> out;
  const std::size_t reps = opt.binary_inputs ? 1 : opt.perturbations;
  for (Eigen::Index j = 0; j < n_in; ++j) {
    Matrix worst = Matrix::Zero(d_out, 1);
    for (std::size_t p = 0; p < reps; ++p) {
      Matrix x = base;
      for (Eigen::Index c = 0; c < pts; ++c) x(j, c) = opt.binary_inputs ? 1.0 - x(j, c) : normal(rng);
      const Matrix y = f(x);
      for (Eigen::Index o = 0; o < y.rows(); ++o) {
        const Eigen::Index i = o % d_out;
        if (allowed(i, j) != 0) continue;
        for (Eigen::Index c = 0; c < pts; ++c) {
          if (y(o, c) != y0(o, c)) {
            const double m = std::isfinite(y(o, c) - y0(o, c)) ? std::abs(y(o, c) - y0(o, c))
                                                               : std::numeric_limits<double>::infinity();
            worst(i, 0) = std::max(worst(i, 0), m > 0 ? m : std::numeric_limits<double>::min());
          }
        }
      }
    }
    for (Eigen::Index i = 0; i < d_out; ++i) {
      if (worst(i, 0) > 0) {
        out.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), worst(i, 0)});
      }
    }
  }
  return out;
}

/// Audits a network against a dependency pattern (variables x inputs).
inline std::vector<Violation> audit_network(const MaskedMLP& net, const IntMatrix& allowed, Rng& rng,
                                            AuditOptions opt = {}) {
  if (static_cast<std::size_t>(allowed.cols()) != net.input_dim() ||
      static_cast<std::size_t>(allowed.rows()) != net.variable_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "audit pattern does not match the network");
  }
  return perturbation_audit([&](const Matrix& x) { return net.forward(x); }, allowed, rng, opt);
}

}  // namespace strnn
