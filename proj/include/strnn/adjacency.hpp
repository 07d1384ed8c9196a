#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "strnn/error.hpp"
#include "strnn/types.hpp"

namespace strnn {

/// Throws on the first entry that is not 0/1 or that sits on or above the diagonal.
inline void validate_adjacency(const IntMatrix& entries) {
  if (entries.rows() < 1 || entries.rows() != entries.cols()) {
    throw Error(ErrorCode::InvalidDim, "adjacency must be a non-empty square matrix, got " +
                                           std::to_string(entries.rows()) + "x" +
                                           std::to_string(entries.cols()));
  }
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
      const auto v = entries(i, j);
      if (v != 0 && v != 1) {
        throw EntryError(ErrorCode::NonBinaryEntry, i, j,
                         "entry " + std::to_string(v) + " is not binary");
      }
    }
  }
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    for (Eigen::Index j = i; j < entries.cols(); ++j) {
      if (entries(i, j) != 0) {
        throw EntryError(ErrorCode::UpperTriangleNonZero, i, j,
                         "adjacency must be strictly lower triangular");
      }
    }
  }
}

/// Binary strictly-lower-triangular conditional-dependence structure.
///
/// Row i lists the parents of variable i: entry (i, j) = 1 means x_i depends on x_j.
/// Instances are immutable and always valid.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(IntMatrix entries) : entries_(std::move(entries)) {
    validate_adjacency(entries_);
  }

  static AdjacencyMatrix zeros(std::size_t d) {
    check_dim(d);
    return AdjacencyMatrix(IntMatrix::Zero(d, d));
  }

  /// Fully autoregressive structure: every variable depends on all predecessors.
  static AdjacencyMatrix dense(std::size_t d) {
    check_dim(d);
    IntMatrix m = IntMatrix::Zero(d, d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < i; ++j) m(i, j) = 1;
    }
    return AdjacencyMatrix(std::move(m));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const IntMatrix& entries() const noexcept { return entries_; }
  bool operator()(std::size_t i, std::size_t j) const { return entries_(i, j) != 0; }

  std::vector<std::size_t> parents(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_(i, j) != 0) out.push_back(j);
    }
    return out;
  }

  std::size_t edge_count() const { return static_cast<std::size_t>(entries_.sum()); }

  /// Reflexive-transitive closure: (i, j) = 1 iff j is i or an ancestor of i.
  IntMatrix ancestor_closure() const {
    const auto d = dim();
    IntMatrix reach = IntMatrix::Identity(d, d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (entries_(i, j) != 0) reach.row(i) = reach.row(i).cwiseMax(reach.row(j));
      }
    }
    return reach;
  }

  friend bool operator==(const AdjacencyMatrix& a, const AdjacencyMatrix& b) {
    return a.entries_ == b.entries_;
  }

  static void check_dim(std::size_t d) {
    if (d < 1) throw Error(ErrorCode::InvalidDim, "dimension must be >= 1");
  }

 private:
  IntMatrix entries_;
};

// ---------------------------------------------------------------------------
// Generators

/// A_ij = 1 iff 1 <= i - j <= k.
inline AdjacencyMatrix gen_prev_k(std::size_t d, std::size_t k) {
  AdjacencyMatrix::check_dim(d);
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  IntMatrix m = IntMatrix::Zero(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = (i > k ? i - k : 0); j < i; ++j) m(i, j) = 1;
  }
  return AdjacencyMatrix(std::move(m));
}

/// A_ij = 1 iff j < i and i - j is odd.
inline AdjacencyMatrix gen_every_other(std::size_t d) {
  AdjacencyMatrix::check_dim(d);
  IntMatrix m = IntMatrix::Zero(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) m(i, j) = ((i - j) % 2 == 1) ? 1 : 0;
  }
  return AdjacencyMatrix(std::move(m));
}

/// Each strictly-lower entry is 1 iff an independent Uniform(0,1) draw exceeds threshold.
/// Draws are consumed row by row, left to right.
inline AdjacencyMatrix gen_random_sparse(std::size_t d, double threshold, Rng& rng) {
  AdjacencyMatrix::check_dim(d);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "threshold must lie in [0, 1]");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  IntMatrix m = IntMatrix::Zero(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) m(i, j) = unif(rng) > threshold ? 1 : 0;
  }
  return AdjacencyMatrix(std::move(m));
}

/// Local image structure over row-major pixels: pixel p depends on every earlier pixel q
/// whose row and column both lie within nbr_size of p's (a square window of that radius).
inline AdjacencyMatrix gen_neighborhood(std::size_t rows, std::size_t cols, std::size_t nbr_size) {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::InvalidDim, "image dims must be >= 1");
  if (nbr_size < 1) throw Error(ErrorCode::InvalidArgument, "nbr_size must be >= 1");
  const std::size_t d = rows * cols;
  IntMatrix m = IntMatrix::Zero(d, d);
  const auto within = [nbr_size](std::size_t a, std::size_t b) {
    return (a > b ? a - b : b - a) <= nbr_size;
  };
  for (std::size_t p = 0; p < d; ++p) {
    const std::size_t pr = p / cols, pc = p % cols;
    for (std::size_t q = 0; q < p; ++q) {
      if (within(pr, q / cols) && within(pc, q % cols)) m(p, q) = 1;
    }
  }
  return AdjacencyMatrix(std::move(m));
}

struct EveryOther {};
struct PrevK {
  std::size_t k = 1;
};
struct RandomSparse {
  double threshold = 0.5;
};
struct Neighborhood {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t nbr_size = 1;
};

using GeneratorScheme = std::variant<EveryOther, PrevK, RandomSparse, Neighborhood>;

struct GeneratorSpec {
  GeneratorScheme scheme;
  std::uint64_t seed = 0;  // consumed by RandomSparse only
};

/// Dispatches a generator spec. `d` is ignored by Neighborhood (d = rows * cols).
inline AdjacencyMatrix generate(const GeneratorSpec& spec, std::size_t d) {
  return std::visit(
      [&](const auto& s) -> AdjacencyMatrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EveryOther>) {
          return gen_every_other(d);
        } else if constexpr (std::is_same_v<T, PrevK>) {
          return gen_prev_k(d, s.k);
        } else if constexpr (std::is_same_v<T, RandomSparse>) {
          Rng rng(spec.seed);
          return gen_random_sparse(d, s.threshold, rng);
        } else {
          return gen_neighborhood(s.rows, s.cols, s.nbr_size);
        }
      },
      spec.scheme);
}

// ---------------------------------------------------------------------------
// Plain-text matrix format: first line holds the row count, then one line of
// whitespace-separated integers per row. Blank lines are ignored.

inline std::string format_matrix(const IntMatrix& m) {
  std::ostringstream os;
  os << m.rows() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << m(i, j);
    }
    os << '\n';
  }
  return os.str();
}

inline IntMatrix parse_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  long long rows = -1;
  std::vector<std::vector<std::int64_t>> data;
  const auto parse_token = [&](const std::string& tok) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0' || errno != 0) {
      throw ParseError(line_no, "invalid integer token '" + tok + "'");
    }
    return static_cast<std::int64_t>(v);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    if (rows < 0) {
      if (toks.size() != 1) throw ParseError(line_no, "expected a single row count");
      rows = parse_token(toks[0]);
      if (rows < 1) throw ParseError(line_no, "row count must be >= 1");
      continue;
    }
    if (static_cast<long long>(data.size()) == rows) {
      throw ParseError(line_no, "more rows than declared");
    }
    std::vector<std::int64_t> row;
    row.reserve(toks.size());
    for (const auto& t : toks) row.push_back(parse_token(t));
    if (!data.empty() && row.size() != data.front().size()) {
      throw ParseError(line_no, "row has " + std::to_string(row.size()) + " entries, expected " +
                                    std::to_string(data.front().size()));
    }
    data.push_back(std::move(row));
  }
  if (rows < 0) throw ParseError(line_no, "missing row count");
  if (static_cast<long long>(data.size()) != rows) {
    throw ParseError(line_no, "expected " + std::to_string(rows) + " rows, found " +
                                  std::to_string(data.size()));
  }
  IntMatrix m(rows, static_cast<Eigen::Index>(data.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = data[i][j];
  }
  return m;
}

inline AdjacencyMatrix parse_adjacency(const std::string& text) {
  return AdjacencyMatrix(parse_matrix(text));
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline IntMatrix read_int_matrix(const std::filesystem::path& path) {
  return parse_matrix(read_text_file(path));
}

inline void write_matrix(const IntMatrix& m, const std::filesystem::path& path) {
  write_text_file(path, format_matrix(m));
}

inline AdjacencyMatrix read_matrix(const std::filesystem::path& path) {
  return parse_adjacency(read_text_file(path));
}

inline void write_matrix(const AdjacencyMatrix& a, const std::filesystem::path& path) {
  write_matrix(a.entries(), path);
}

}  // namespace strnn
