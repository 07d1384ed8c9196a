#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>

#include "strnn/adjacency.hpp"
#include "strnn/checkpoint.hpp"
#include "strnn/dataset.hpp"
#include "strnn/linear_sem.hpp"

namespace strnn {

/// x_i ~ Bernoulli(sigmoid(sum_j alpha_ij x_j + c_i)).
struct LogisticSem {
  Matrix alpha;
  Vector c;
};

/// x_i ~ N(sum_j alpha_ij x_j + c_i, sigma_i^2).
struct GaussianSem {
  Matrix alpha;
  Vector c;
  Vector sigma;
};

/// Roots draw from a 3-component Gaussian mixture; dependents follow
/// x_t = sqrt(sum_j (w_tj x_j)^2) + N(0, 1).
struct MultimodalSem {
  Matrix w;
  Matrix means;    // d x 3, used for parentless coordinates
  Matrix sds;      // d x 3
  Matrix weights;  // d x 3, rows sum to 1
};

inline constexpr double kSigmaFloor = 0.01;

namespace detail {

inline Matrix masked_normal(const AdjacencyMatrix& a, Rng& rng) {
  std::normal_distribution<double> g;
  const auto d = static_cast<Eigen::Index>(a.dim());
  Matrix m = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) != 0) m(i, j) = g(rng);
    }
  }
  return m;
}

inline Vector normal_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> g;
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
  return v;
}

}  // namespace detail

inline LogisticSem draw_logistic_sem(const AdjacencyMatrix& a, Rng& rng) {
  LogisticSem s;
  s.alpha = detail::masked_normal(a, rng);
  s.c = detail::normal_vector(a.dim(), rng);
  return s;
}

inline GaussianSem draw_gaussian_sem(const AdjacencyMatrix& a, Rng& rng) {
  GaussianSem s;
  s.alpha = detail::masked_normal(a, rng);
  s.c = detail::normal_vector(a.dim(), rng);
  s.sigma = detail::normal_vector(a.dim(), rng).cwiseAbs().cwiseMax(kSigmaFloor);
  return s;
}

/// Rows are samples.
inline Matrix sample_logistic_sem(const LogisticSem& s, std::size_t n, Rng& rng) {
  const auto d = s.c.size();
  Matrix x(static_cast<Eigen::Index>(n), d);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double p = sigmoid(s.alpha.row(i).head(i).dot(x.row(r).head(i)) + s.c(i));
      x(r, i) = u(rng) < p ? 1.0 : 0.0;
    }
  }
  return x;
}

inline Matrix sample_gaussian_sem(const GaussianSem& s, std::size_t n, Rng& rng) {
  const auto d = s.c.size();
  Matrix x(static_cast<Eigen::Index>(n), d);
  std::normal_distribution<double> g;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index i = 0; i < d; ++i) {
      x(r, i) = s.alpha.row(i).head(i).dot(x.row(r).head(i)) + s.c(i) + s.sigma(i) * g(rng);
    }
  }
  return x;
}

/// Exact log-probability of a binary vector under the generating law.
inline double logistic_sem_log_prob(const LogisticSem& s, const Vector& x) {
  double lp = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double o = s.alpha.row(i).head(i).dot(x.head(i)) + s.c(i);
    lp -= softplus(o) - x(i) * o;
  }
  return lp;
}

/// Exact per-sample NLL of the generating linear-Gaussian law; columns are samples.
inline Vector gaussian_sem_nll(const GaussianSem& s, const Matrix& x) {
  Vector nll = Vector::Zero(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double r = (x(i, c) - s.alpha.row(i).head(i).dot(x.col(c).head(i)) - s.c(i)) / s.sigma(i);
      nll(c) += std::log(s.sigma(i)) + kHalfLog2Pi + 0.5 * r * r;
    }
  }
  return nll;
}

/// Joint mean and covariance of the linear-Gaussian law.
inline std::pair<Vector, Matrix> gaussian_sem_moments(const GaussianSem& s) {
  const auto d = s.c.size();
  const Matrix inv = (Matrix::Identity(d, d) - s.alpha).inverse();
  return {inv * s.c, inv * s.sigma.array().square().matrix().asDiagonal() * inv.transpose()};
}

inline std::pair<Dataset, LogisticSem> gen_binary(const AdjacencyMatrix& a, std::size_t n, Rng& rng) {
  auto sem = draw_logistic_sem(a, rng);
  Dataset data;
  data.kind = DataKind::Binary;
  data.samples = sample_logistic_sem(sem, n, rng);
  return {std::move(data), std::move(sem)};
}

inline std::pair<Dataset, GaussianSem> gen_gaussian(const AdjacencyMatrix& a, std::size_t n, Rng& rng) {
  auto sem = draw_gaussian_sem(a, rng);
  Dataset data;
  data.kind = DataKind::Real;
  data.samples = sample_gaussian_sem(sem, n, rng);
  return {std::move(data), std::move(sem)};
}

inline Matrix sample_multimodal(const MultimodalSem& s, const AdjacencyMatrix& a, std::size_t n, Rng& rng) {
  const auto d = s.w.rows();
  Matrix x(static_cast<Eigen::Index>(n), d);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (a.parents(static_cast<std::size_t>(i)).empty()) {
        const double pick = u(rng);
        Eigen::Index k = 0;
        for (double acc = s.weights(i, 0); k < 2 && pick >= acc; acc += s.weights(i, ++k)) {
        }
        x(r, i) = s.means(i, k) + s.sds(i, k) * g(rng);
      } else {
        const double sq = (s.w.row(i).head(i).array() * x.row(r).head(i).array()).square().sum();
        x(r, i) = std::sqrt(sq) + g(rng);
      }
    }
  }
  return x;
}

struct MultimodalData {
  Dataset data;
  AdjacencyMatrix adjacency;
  MultimodalSem sem;
};

inline MultimodalData gen_nonlinear_multimodal(std::size_t d, double threshold, std::size_t n, Rng& rng) {
  if (d < 2) throw Error(ErrorCode::InvalidDim, "multimodal data needs d >= 2");
  auto a = gen_random_sparse(d, threshold, rng);
  const auto D = static_cast<Eigen::Index>(d);
  MultimodalSem s;
  s.w = Matrix::Zero(D, D);
  std::uniform_real_distribution<double> uw(-3.0, 3.0), um(-8.0, 8.0), us(0.01, 2.0);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (Eigen::Index i = 0; i < D; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) != 0) s.w(i, j) = uw(rng);
    }
  }
  s.means.resize(D, 3);
  s.sds.resize(D, 3);
  s.weights.resize(D, 3);
  for (Eigen::Index i = 0; i < D; ++i) {
    for (Eigen::Index k = 0; k < 3; ++k) {
      s.means(i, k) = um(rng);
      s.sds(i, k) = us(rng);
      s.weights(i, k) = gamma(rng);  // Dirichlet(1,1,1) via normalized Gamma(1) draws
    }
    s.weights.row(i) /= s.weights.row(i).sum();
  }
  MultimodalData out{Dataset{}, a, s};
  out.data.kind = DataKind::Real;
  out.data.samples = sample_multimodal(s, a, n, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Spec-driven generation

enum class Family { BinarySem, GaussianSem, NonlinearMultimodal, LinearSem };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::BinarySem: return "binary_sem";
    case Family::GaussianSem: return "gaussian_sem";
    case Family::NonlinearMultimodal: return "nonlinear_multimodal";
    case Family::LinearSem: return "linear_sem";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  for (Family f : {Family::BinarySem, Family::GaussianSem, Family::NonlinearMultimodal, Family::LinearSem}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown family '" + std::string(s) + "'");
}

struct SynthSpec {
  Family family = Family::GaussianSem;
  std::size_t d = 0;
  /// Adjacency for the SEM families; multimodal uses gen_random_sparse(d, threshold) and
  /// linear_sem derives it from the drawn weights.
  std::variant<GeneratorSpec, AdjacencyMatrix> adjacency = GeneratorSpec{PrevK{1}, 0};
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  double threshold = 0.8;  // nonlinear_multimodal
  double cutoff = 1.5;     // linear_sem

  void validate() const {
    ratios.validate();
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  }
};

struct Synthetic {
  Dataset data;
  AdjacencyMatrix adjacency;
  Json coefficients;
};

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto n_cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n_cols) throw Error(ErrorCode::ParseError, "ragged matrix in JSON");
    for (std::size_t c = 0; c < n_cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

inline Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Deterministic given the spec: structure, coefficients, samples and split each use
/// their own stream derived from `seed`.
inline Synthetic generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng coeff_rng(mix_seed(spec.seed, 1));
  Rng split_rng(mix_seed(spec.seed, 2));
  auto structure = [&]() -> AdjacencyMatrix {
    if (const auto* m = std::get_if<AdjacencyMatrix>(&spec.adjacency)) return *m;
    return generate(std::get<GeneratorSpec>(spec.adjacency), spec.d);
  };
  Synthetic out{Dataset{}, AdjacencyMatrix::zeros(1), Json::object()};
  switch (spec.family) {
    case Family::BinarySem: {
      out.adjacency = structure();
      auto [data, sem] = gen_binary(out.adjacency, spec.n, coeff_rng);
      out.data = std::move(data);
      out.coefficients = {{"alpha", matrix_json(sem.alpha)}, {"c", vector_json(sem.c)}};
      break;
    }
    case Family::GaussianSem: {
      out.adjacency = structure();
      auto [data, sem] = gen_gaussian(out.adjacency, spec.n, coeff_rng);
      out.data = std::move(data);
      out.coefficients = {{"alpha", matrix_json(sem.alpha)}, {"c", vector_json(sem.c)}, {"sigma", vector_json(sem.sigma)}};
      break;
    }
    case Family::NonlinearMultimodal: {
      auto gen = gen_nonlinear_multimodal(spec.d, spec.threshold, spec.n, coeff_rng);
      out.adjacency = gen.adjacency;
      out.data = std::move(gen.data);
      out.coefficients = {{"w", matrix_json(gen.sem.w)},
                          {"mixture_means", matrix_json(gen.sem.means)},
                          {"mixture_sds", matrix_json(gen.sem.sds)},
                          {"mixture_weights", matrix_json(gen.sem.weights)}};
      break;
    }
    case Family::LinearSem: {
      const auto sem = gen_linear_sem(spec.d, spec.cutoff, coeff_rng);
      out.adjacency = sem.adjacency();
      out.data.kind = DataKind::Real;
      out.data.samples = sem_sample(sem, spec.n, coeff_rng);
      out.coefficients = {{"weights", matrix_json(sem.weights)}};
      break;
    }
  }
  split(out.data, spec.ratios, split_rng);
  return out;
}

// ---------------------------------------------------------------------------
// Files: "n d kind" header, then one whitespace-separated row per sample.

inline std::string format_dataset(const Dataset& data) {
  std::ostringstream os;
  os.precision(17);
  os << data.size() << ' ' << data.dim() << ' ' << to_string(data.kind) << '\n';
  for (Eigen::Index r = 0; r < data.samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.samples.cols(); ++c) {
      if (c) os << ' ';
      if (data.kind == DataKind::Binary) {
        os << static_cast<int>(data.samples(r, c));
      } else {
        os << data.samples(r, c);
      }
    }
    os << '\n';
  }
  return os.str();
}

inline Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r,") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(1, "empty dataset file");
  std::istringstream head(line);
  std::size_t n = 0, d = 0;
  std::string kind;
  if (!(head >> n >> d >> kind)) throw ParseError(line_no, "expected header 'n d kind'");
  Dataset data;
  try {
    data.kind = parse_data_kind(kind);
  } catch (const Error&) {
    throw ParseError(line_no, "unknown kind '" + kind + "'");
  }
  data.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    if (!next_line()) throw ParseError(line_no + 1, "expected " + std::to_string(n) + " rows");
    for (auto& ch : line) if (ch == ',') ch = ' ';
    std::istringstream row(line);
    for (std::size_t c = 0; c < d; ++c) {
      double v;
      if (!(row >> v)) throw ParseError(line_no, "expected " + std::to_string(d) + " values");
      data.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    std::string extra;
    if (row >> extra) throw ParseError(line_no, "too many values");
  }
  if (data.kind == DataKind::Binary && !((data.samples.array() == 0.0) || (data.samples.array() == 1.0)).all()) {
    throw Error(ErrorCode::NonBinaryInput, "binary dataset holds a value other than 0/1");
  }
  return data;
}

inline Json split_json(const Split& s) { return {{"train", s.train}, {"val", s.val}, {"test", s.test}}; }

inline Split split_from_json(const Json& j) {
  return {j.at("train").get<std::vector<std::size_t>>(), j.at("val").get<std::vector<std::size_t>>(),
          j.at("test").get<std::vector<std::size_t>>()};
}

/// Reads a dataset file and the split stored in its sidecar.
inline Dataset load_dataset(const std::filesystem::path& data_path, const std::filesystem::path& sidecar_path) {
  Dataset data = parse_dataset(read_text_file(data_path));
  const Json side = read_json_file(sidecar_path);
  try {
    data.split = split_from_json(side.at("split"));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, sidecar_path.string() + ": " + e.what());
  }
  data.validate();
  return data;
}

}  // namespace strnn
