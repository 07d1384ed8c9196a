#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strnn/adjacency.hpp"
#include "strnn/error.hpp"
#include "strnn/types.hpp"

namespace strnn {

/// Ordered per-layer binary masks. Mask l has shape h_l x h_{l-1} with h_0 = input dim,
/// so the network's connectivity is masks.back() * ... * masks.front().
struct MaskSet {
  std::vector<IntMatrix> masks;

  std::size_t size() const noexcept { return masks.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(masks.front().cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(masks.back().rows()); }

  /// Layer widths (d_in, h_1, ..., h_H, d_out).
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> out;
    if (masks.empty()) return out;
    out.push_back(input_dim());
    for (const auto& m : masks) out.push_back(static_cast<std::size_t>(m.rows()));
    return out;
  }
};

enum class Objective { MaxConnections, ConnectionsMinusVariance };
enum class Method { Greedy, Exact, Zuko };

inline std::string_view to_string(Objective o) {
  return o == Objective::MaxConnections ? "max_connections" : "connections_minus_variance";
}

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Greedy: return "greedy";
    case Method::Exact: return "exact";
    case Method::Zuko: return "zuko";
  }
  return "unknown";
}

/// One-hidden-layer factorization: left * right has the sparsity of the factored matrix.
struct LayerFactors {
  IntMatrix left;   // M^V, d1 x h
  IntMatrix right;  // M^W, h x d2
};

/// Integer path-count matrix masks.back() * ... * masks.front().
inline IntMatrix mask_product(const MaskSet& set) {
  if (set.masks.empty()) throw Error(ErrorCode::ShapeMismatch, "empty mask set");
  IntMatrix prod = set.masks.front();
  for (std::size_t l = 1; l < set.masks.size(); ++l) {
    const auto& m = set.masks[l];
    if (m.cols() != prod.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "mask " + std::to_string(l) + " has " +
                                                std::to_string(m.cols()) + " columns, expected " +
                                                std::to_string(prod.rows()));
    }
    prod = m * prod;
  }
  return prod;
}

/// True iff product(i, j) > 0 exactly where target(i, j) is nonzero.
inline bool check_sparsity_equal(const IntMatrix& product, const IntMatrix& target) {
  if (product.rows() != target.rows() || product.cols() != target.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "product and target shapes differ");
  }
  return ((product.array() > 0) == (target.array() != 0)).all();
}

inline bool check_sparsity_equal(const IntMatrix& product, const AdjacencyMatrix& a) {
  return check_sparsity_equal(product, a.entries());
}

/// Connection count, optionally penalized by the population variance of all entries.
inline double objective_value(const IntMatrix& product, Objective obj) {
  const double n = static_cast<double>(product.size());
  if (n == 0) return 0.0;
  const double sum = static_cast<double>(product.sum());
  if (obj == Objective::MaxConnections) return sum;
  const double mean = sum / n;
  double ss = 0.0;
  for (Eigen::Index k = 0; k < product.size(); ++k) {
    const double dev = static_cast<double>(product.data()[k]) - mean;
    ss += dev * dev;
  }
  return sum - ss / n;
}

namespace detail {

// Packed bit rows for subset tests on wide binary matrices.
class BitRows {
 public:
  explicit BitRows(const IntMatrix& m)
      : rows_(static_cast<std::size_t>(m.rows())),
        words_((static_cast<std::size_t>(m.cols()) + 63) / 64),
        bits_(rows_ * words_, 0) {
    for (std::size_t i = 0; i < rows_; ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m(i, j) != 0) bits_[i * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
      }
    }
  }

  std::span<const std::uint64_t> row(std::size_t i) const {
    return {bits_.data() + i * words_, words_};
  }

  bool is_zero(std::size_t i) const {
    const auto r = row(i);
    return std::all_of(r.begin(), r.end(), [](std::uint64_t w) { return w == 0; });
  }

  /// row a is a subset of row b
  bool subset(std::size_t a, std::size_t b) const {
    const auto ra = row(a), rb = row(b);
    for (std::size_t w = 0; w < words_; ++w) {
      if (ra[w] & ~rb[w]) return false;
    }
    return true;
  }

  bool equal(std::size_t a, std::size_t b) const {
    const auto ra = row(a), rb = row(b);
    return std::equal(ra.begin(), ra.end(), rb.begin());
  }

  std::size_t rows() const noexcept { return rows_; }

 private:
  std::size_t rows_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
};

// Assigns each row the index of its first identical row.
inline std::vector<std::size_t> first_occurrence_ids(const BitRows& rows) {
  std::map<std::vector<std::uint64_t>, std::size_t> seen;
  std::vector<std::size_t> ids(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto r = rows.row(i);
    auto [it, inserted] = seen.try_emplace(std::vector<std::uint64_t>(r.begin(), r.end()), i);
    ids[i] = it->second;
  }
  return ids;
}

inline void require_binary(const IntMatrix& a) {
  if (!is_binary(a)) throw Error(ErrorCode::NonBinaryEntry, "matrix to factor must be binary");
}

}  // namespace detail

/// Greedy single-layer factorization.
///
/// The right factor's rows cycle through the nonzero rows of `a` in first-occurrence
/// order; the left factor starts all-ones and zeroes (i, r) whenever right-row r has a one
/// where row i of `a` has a zero. Equivalently left(i, r) = [right row r is a subset of
/// row i]. When h is smaller than the number of nonzero rows but still covers the distinct
/// ones, only distinct rows are cycled.
inline LayerFactors greedy_factor_layer(const IntMatrix& a, std::size_t h) {
  detail::require_binary(a);
  const auto d1 = a.rows(), d2 = a.cols();
  const detail::BitRows rows(a);
  const auto ids = detail::first_occurrence_ids(rows);

  std::vector<std::size_t> nonzero, distinct;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    if (rows.is_zero(i)) continue;
    nonzero.push_back(i);
    if (ids[i] == i) distinct.push_back(i);
  }

  LayerFactors f{IntMatrix::Zero(d1, static_cast<Eigen::Index>(h)),
                 IntMatrix::Zero(static_cast<Eigen::Index>(h), d2)};
  if (nonzero.empty()) return f;
  if (h < distinct.size()) {
    throw Error(ErrorCode::InsufficientWidth,
                "width " + std::to_string(h) + " < " + std::to_string(distinct.size()) +
                    " distinct nonzero rows");
  }
  const auto& source = h >= nonzero.size() ? nonzero : distinct;

  // subset_of[k][i]: distinct nonzero row k is contained in row i of a.
  std::vector<std::size_t> slot(rows.rows(), 0);
  for (std::size_t k = 0; k < distinct.size(); ++k) slot[distinct[k]] = k;
  std::vector<std::vector<char>> subset_of(distinct.size(), std::vector<char>(rows.rows(), 0));
  std::vector<std::size_t> unique_rows;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    if (ids[i] == i) unique_rows.push_back(i);
  }
  for (std::size_t k = 0; k < distinct.size(); ++k) {
    for (const auto u : unique_rows) subset_of[k][u] = rows.subset(distinct[k], u) ? 1 : 0;
  }

  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t src = source[r % source.size()];
    f.right.row(static_cast<Eigen::Index>(r)) = a.row(static_cast<Eigen::Index>(src));
    const auto& col = subset_of[slot[ids[src]]];
    for (Eigen::Index i = 0; i < d1; ++i) {
      f.left(i, static_cast<Eigen::Index>(r)) = col[ids[static_cast<std::size_t>(i)]];
    }
  }
  return f;
}

/// Exact-search limits standing in for an external integer-programming solver.
struct ExactBudget {
  std::size_t max_cells = 42;  // d1 * d2
  std::size_t max_width = 8;
};

namespace detail {

struct Concept {
  std::vector<std::size_t> inputs;   // columns of the factored matrix
  std::vector<std::size_t> outputs;  // rows whose support contains every input
  std::int64_t area = 0;
};

// Every nonempty intersection of nonzero rows, each paired with its maximal row set.
inline std::vector<Concept> enumerate_concepts(const IntMatrix& a) {
  const auto d1 = static_cast<std::size_t>(a.rows());
  const auto d2 = static_cast<std::size_t>(a.cols());
  using Bits = std::vector<char>;
  std::set<Bits> intents;
  std::vector<Bits> frontier;
  for (std::size_t i = 0; i < d1; ++i) {
    Bits b(d2);
    for (std::size_t j = 0; j < d2; ++j) b[j] = a(i, j) != 0;
    if (std::find(b.begin(), b.end(), 1) == b.end()) continue;
    if (intents.insert(b).second) frontier.push_back(b);
  }
  const std::vector<Bits> row_bits(intents.begin(), intents.end());
  while (!frontier.empty()) {
    std::vector<Bits> next;
    for (const auto& f : frontier) {
      for (const auto& r : row_bits) {
        Bits meet(d2);
        bool any = false;
        for (std::size_t j = 0; j < d2; ++j) {
          meet[j] = f[j] && r[j];
          any = any || meet[j];
        }
        if (any && intents.insert(meet).second) next.push_back(std::move(meet));
      }
    }
    frontier = std::move(next);
  }
  std::vector<Concept> out;
  for (const auto& s : intents) {
    Concept c;
    for (std::size_t j = 0; j < d2; ++j) {
      if (s[j]) c.inputs.push_back(j);
    }
    for (std::size_t i = 0; i < d1; ++i) {
      bool covers = true;
      for (const auto j : c.inputs) covers = covers && a(i, j) != 0;
      if (covers) c.outputs.push_back(i);
    }
    c.area = static_cast<std::int64_t>(c.inputs.size() * c.outputs.size());
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Concept& x, const Concept& y) { return x.area > y.area; });
  return out;
}

inline LayerFactors masks_from_units(const IntMatrix& a, std::size_t h,
                                     const std::vector<Concept>& concepts,
                                     const std::vector<std::size_t>& units) {
  LayerFactors f{IntMatrix::Zero(a.rows(), static_cast<Eigen::Index>(h)),
                 IntMatrix::Zero(static_cast<Eigen::Index>(h), a.cols())};
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (units[k] >= concepts.size()) continue;  // empty unit
    const auto& c = concepts[units[k]];
    for (const auto j : c.inputs) f.right(static_cast<Eigen::Index>(k), j) = 1;
    for (const auto i : c.outputs) f.left(i, static_cast<Eigen::Index>(k)) = 1;
  }
  return f;
}

// Max-connections: the objective is additive over units, so an optimum is a set of
// distinct concepts covering every one of `a` plus copies of the largest concept. Search
// covers by branching on the first uncovered cell, minimizing the area shortfall.
inline std::vector<std::size_t> best_cover_max_connections(const IntMatrix& a, std::size_t h,
                                                           const std::vector<Concept>& concepts) {
  const auto d2 = static_cast<std::size_t>(a.cols());
  const std::int64_t max_area = concepts.front().area;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0) cells.emplace_back(i, j);
    }
  }
  // covering[cell] = concepts containing it, largest first
  std::vector<std::vector<std::size_t>> covering(cells.size());
  std::vector<std::vector<char>> contains(concepts.size(),
                                          std::vector<char>(a.rows() * d2, 0));
  for (std::size_t c = 0; c < concepts.size(); ++c) {
    for (const auto i : concepts[c].outputs) {
      for (const auto j : concepts[c].inputs) contains[c][i * d2 + j] = 1;
    }
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    for (std::size_t c = 0; c < concepts.size(); ++c) {
      if (contains[c][cells[k].first * d2 + cells[k].second]) covering[k].push_back(c);
    }
  }

  std::vector<int> cover_count(cells.size(), 0);
  std::vector<std::size_t> chosen, best;
  std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();

  auto recurse = [&](auto&& self, std::int64_t cost) -> void {
    if (cost >= best_cost) return;
    std::size_t first = cells.size();
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cover_count[k] == 0) {
        first = k;
        break;
      }
    }
    if (first == cells.size()) {
      best_cost = cost;
      best = chosen;
      return;
    }
    if (chosen.size() == h) return;
    for (const auto c : covering[first]) {
      const std::int64_t next = cost + (max_area - concepts[c].area);
      if (next >= best_cost) continue;  // covering[] is sorted by decreasing area
      chosen.push_back(c);
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (contains[c][cells[k].first * d2 + cells[k].second]) ++cover_count[k];
      }
      self(self, next);
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (contains[c][cells[k].first * d2 + cells[k].second]) --cover_count[k];
      }
      chosen.pop_back();
    }
  };
  recurse(recurse, 0);
  if (best_cost == std::numeric_limits<std::int64_t>::max()) {
    throw Error(ErrorCode::InsufficientWidth, "no exact factorization with width " +
                                                  std::to_string(h));
  }
  best.resize(h, 0);  // pad with the largest concept
  return best;
}

// Connections-minus-variance: non-additive, so enumerate multisets of units (concepts or
// an empty unit) with a sum-based upper bound; variance is nonnegative.
inline std::vector<std::size_t> best_units_minus_variance(const IntMatrix& a, std::size_t h,
                                                          const std::vector<Concept>& concepts) {
  const auto d1 = static_cast<std::size_t>(a.rows());
  const auto d2 = static_cast<std::size_t>(a.cols());
  const std::size_t n_options = concepts.size() + 1;  // last option = empty unit
  const std::int64_t max_area = concepts.front().area;
  std::vector<std::int64_t> counts(d1 * d2, 0);
  std::size_t uncovered = 0;
  for (std::size_t i = 0; i < d1; ++i) {
    for (std::size_t j = 0; j < d2; ++j) uncovered += a(i, j) != 0;
  }
  const double n = static_cast<double>(d1 * d2);
  std::vector<std::size_t> chosen, best;
  double best_value = -std::numeric_limits<double>::infinity();

  auto apply = [&](std::size_t c, int sign) {
    for (const auto i : concepts[c].outputs) {
      for (const auto j : concepts[c].inputs) {
        auto& v = counts[i * d2 + j];
        if (sign > 0 && v == 0) --uncovered;
        v += sign;
        if (sign < 0 && v == 0) ++uncovered;
      }
    }
  };

  auto recurse = [&](auto&& self, std::size_t start, std::int64_t sum) -> void {
    const std::size_t remaining = h - chosen.size();
    if (static_cast<double>(sum + static_cast<std::int64_t>(remaining) * max_area) <= best_value) {
      return;
    }
    if (remaining == 0) {
      if (uncovered != 0) return;
      const double mean = static_cast<double>(sum) / n;
      double ss = 0.0;
      for (const auto v : counts) ss += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
      const double value = static_cast<double>(sum) - ss / n;
      if (value > best_value) {
        best_value = value;
        best = chosen;
      }
      return;
    }
    for (std::size_t c = start; c < n_options; ++c) {
      chosen.push_back(c);
      if (c < concepts.size()) {
        apply(c, +1);
        self(self, c, sum + concepts[c].area);
        apply(c, -1);
      } else {
        self(self, c, sum);
      }
      chosen.pop_back();
    }
  };
  recurse(recurse, 0, 0);
  if (best.empty() && h > 0) {
    throw Error(ErrorCode::InsufficientWidth, "no exact factorization with width " +
                                                  std::to_string(h));
  }
  return best;
}

}  // namespace detail

/// Objective-optimal single-layer factorization by exhaustive search.
///
/// Each hidden unit is a biclique of `a`: an input set S and the outputs whose rows contain
/// S. Only closed input sets (intersections of rows) are searched; closing a unit never
/// lowers the connection count or breaks feasibility.
inline LayerFactors exact_factor_layer(const IntMatrix& a, std::size_t h, Objective obj,
                                       ExactBudget budget = {}) {
  detail::require_binary(a);
  if (static_cast<std::size_t>(a.size()) > budget.max_cells || h > budget.max_width) {
    throw Error(ErrorCode::BudgetExceeded,
                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " with width " +
                    std::to_string(h) + " exceeds the exact-search budget (" +
                    std::to_string(budget.max_cells) + " cells, width " +
                    std::to_string(budget.max_width) + ")");
  }
  const auto concepts = detail::enumerate_concepts(a);
  if (concepts.empty()) {
    return {IntMatrix::Zero(a.rows(), static_cast<Eigen::Index>(h)),
            IntMatrix::Zero(static_cast<Eigen::Index>(h), a.cols())};
  }
  const auto units = obj == Objective::MaxConnections
                         ? detail::best_cover_max_connections(a, h, concepts)
                         : detail::best_units_minus_variance(a, h, concepts);
  return detail::masks_from_units(a, h, concepts, units);
}

/// Zuko-style masks: hidden units carry unique rows of `a` (lexicographically sorted),
/// tiled to fill each width; unit u feeds unit v when v's row contains u's row.
inline MaskSet zuko_factor(const IntMatrix& a, std::span<const std::size_t> hidden) {
  detail::require_binary(a);
  const auto d1 = static_cast<std::size_t>(a.rows());
  const auto d2 = a.cols();

  std::vector<std::vector<std::int64_t>> rows(d1);
  for (std::size_t i = 0; i < d1; ++i) {
    rows[i].assign(a.row(static_cast<Eigen::Index>(i)).data(),
                   a.row(static_cast<Eigen::Index>(i)).data() + d2);
  }
  std::vector<std::vector<std::int64_t>> unique_rows(rows);
  std::sort(unique_rows.begin(), unique_rows.end());
  unique_rows.erase(std::unique(unique_rows.begin(), unique_rows.end()), unique_rows.end());
  const std::size_t u = unique_rows.size();
  std::vector<std::size_t> inverse(d1);
  for (std::size_t i = 0; i < d1; ++i) {
    inverse[i] = static_cast<std::size_t>(
        std::lower_bound(unique_rows.begin(), unique_rows.end(), rows[i]) - unique_rows.begin());
  }
  // precedence(p, q): unique row q is contained in unique row p
  IntMatrix precedence = IntMatrix::Zero(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u));
  for (std::size_t p = 0; p < u; ++p) {
    for (std::size_t q = 0; q < u; ++q) {
      bool sub = true;
      for (Eigen::Index j = 0; j < d2 && sub; ++j) sub = !(unique_rows[q][j] && !unique_rows[p][j]);
      precedence(p, q) = sub ? 1 : 0;
    }
  }

  MaskSet out;
  if (a.isZero()) {
    std::size_t prev = static_cast<std::size_t>(d2);
    for (const auto h : hidden) {
      out.masks.push_back(IntMatrix::Zero(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(prev)));
      prev = h;
    }
    out.masks.push_back(IntMatrix::Zero(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(prev)));
    return out;
  }

  std::vector<std::size_t> indices;  // unique-row label of each unit in the previous layer
  for (std::size_t layer = 0; layer <= hidden.size(); ++layer) {
    // Rows indexed by unique-row label, columns by previous-layer units.
    IntMatrix mask;
    if (layer == 0) {
      mask.resize(static_cast<Eigen::Index>(u), d2);
      for (std::size_t p = 0; p < u; ++p) {
        for (Eigen::Index j = 0; j < d2; ++j) mask(p, j) = unique_rows[p][j];
      }
    } else {
      mask.resize(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(indices.size()));
      for (std::size_t p = 0; p < u; ++p) {
        for (std::size_t k = 0; k < indices.size(); ++k) mask(p, k) = precedence(p, indices[k]);
      }
    }
    if (layer < hidden.size()) {
      std::vector<std::size_t> reachable;
      for (std::size_t p = 0; p < u; ++p) {
        if (mask.row(static_cast<Eigen::Index>(p)).sum() != 0) reachable.push_back(p);
      }
      const std::size_t h = hidden[layer];
      std::vector<std::size_t> next(h);
      for (std::size_t k = 0; k < h; ++k) next[k] = reachable[k % reachable.size()];
      IntMatrix picked(static_cast<Eigen::Index>(h), mask.cols());
      for (std::size_t k = 0; k < h; ++k) picked.row(k) = mask.row(static_cast<Eigen::Index>(next[k]));
      out.masks.push_back(std::move(picked));
      indices = std::move(next);
    } else {
      IntMatrix expanded(static_cast<Eigen::Index>(d1), mask.cols());
      for (std::size_t i = 0; i < d1; ++i) expanded.row(i) = mask.row(static_cast<Eigen::Index>(inverse[i]));
      out.masks.push_back(std::move(expanded));
    }
  }
  return out;
}

inline MaskSet zuko_factor(const AdjacencyMatrix& a, std::span<const std::size_t> hidden) {
  return zuko_factor(a.entries(), hidden);
}

/// Layer-by-layer factorization: a = A_1 * M^1, then A_1 = A_2 * M^2, and so on; the
/// final left factor becomes the output mask. H hidden widths give H + 1 masks.
inline MaskSet factor_multilayer(const IntMatrix& a, std::span<const std::size_t> hidden,
                                 Method method, Objective obj = Objective::MaxConnections,
                                 ExactBudget budget = {}) {
  detail::require_binary(a);
  if (method == Method::Zuko) return zuko_factor(a, hidden);
  MaskSet out;
  IntMatrix current = a;
  for (const auto h : hidden) {
    LayerFactors f = method == Method::Greedy ? greedy_factor_layer(current, h)
                                              : exact_factor_layer(current, h, obj, budget);
    out.masks.push_back(std::move(f.right));
    current = std::move(f.left);
  }
  out.masks.push_back(std::move(current));
  return out;
}

inline MaskSet factor_multilayer(const AdjacencyMatrix& a, std::span<const std::size_t> hidden,
                                 Method method, Objective obj = Objective::MaxConnections,
                                 ExactBudget budget = {}) {
  return factor_multilayer(a.entries(), hidden, method, obj, budget);
}

/// Random masks of the original masked-autoencoder construction, plus the input ordering
/// (degrees m^0, a permutation of 1..d) the masks are autoregressive in.
struct MadeMasks {
  MaskSet masks;
  std::vector<std::int64_t> order;

  /// Connectivity allowed by the ordering: (i, j) = 1 iff order[j] < order[i].
  IntMatrix allowed() const {
    const auto d = static_cast<Eigen::Index>(order.size());
    IntMatrix m = IntMatrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = order[j] < order[i] ? 1 : 0;
    }
    return m;
  }
};

/// Degrees m^l(k) ~ Uniform{min(m^{l-1}), ..., d-1}; hidden masks connect m^l >= m^{l-1},
/// the output mask connects m^0 > m^L. With shuffle_order = false, m^0 = (1, ..., d).
inline MadeMasks made_masks(std::size_t d, std::span<const std::size_t> hidden, Rng& rng,
                            bool shuffle_order = true) {
  AdjacencyMatrix::check_dim(d);
  MadeMasks out;
  out.order.resize(d);
  std::iota(out.order.begin(), out.order.end(), std::int64_t{1});
  if (shuffle_order) std::shuffle(out.order.begin(), out.order.end(), rng);

  std::vector<std::int64_t> prev = out.order;
  for (const auto h : hidden) {
    if (h < 1) throw Error(ErrorCode::InvalidArgument, "hidden widths must be >= 1");
    const std::int64_t lo = *std::min_element(prev.begin(), prev.end());
    const std::int64_t hi = std::max<std::int64_t>(lo, static_cast<std::int64_t>(d) - 1);
    std::uniform_int_distribution<std::int64_t> deg(lo, hi);
    std::vector<std::int64_t> cur(h);
    for (auto& m : cur) m = deg(rng);
    IntMatrix mask(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(prev.size()));
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t q = 0; q < prev.size(); ++q) mask(k, q) = cur[k] >= prev[q] ? 1 : 0;
    }
    out.masks.masks.push_back(std::move(mask));
    prev = std::move(cur);
  }
  IntMatrix last(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(prev.size()));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t q = 0; q < prev.size(); ++q) last(i, q) = out.order[i] > prev[q] ? 1 : 0;
  }
  out.masks.masks.push_back(std::move(last));
  return out;
}

}  // namespace strnn
