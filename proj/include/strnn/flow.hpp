#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "strnn/adjacency.hpp"
#include "strnn/checkpoint.hpp"
#include "strnn/dataset.hpp"
#include "strnn/mlp.hpp"
#include "strnn/optim.hpp"
#include "strnn/train.hpp"

namespace strnn {

/// Coordinate pinned to a data-space value during sequential reconstruction.
struct Pin {
  std::size_t index = 0;
  double value = 0;
};

/// Stack of K affine autoregressive layers sharing one adjacency, with no permutation
/// between layers. Each conditioner outputs d log-scales s followed by d shifts t.
///
/// Data to noise, layer k: u_k = (u_{k-1} - t_k(u_{k-1})) * exp(-s_k(u_{k-1})), with u_0
/// the standardized data. Layers are applied in storage order on the way to noise.
class AffineFlow {
 public:
  AffineFlow() = default;

  /// Conditioners use greedy masks for `a` with the given hidden widths. The final layer
  /// starts small (`output_scale`) so the initial flow is close to the identity.
  AffineFlow(const AdjacencyMatrix& a, std::size_t num_layers, std::span<const std::size_t> hidden,
             Rng& rng, double output_scale = 1e-2)
      : adjacency_(a) {
    if (num_layers == 0) throw Error(ErrorCode::InvalidArgument, "flow needs at least one layer");
    const MaskSet masks = factor_multilayer(a, hidden, Method::Greedy);
    for (std::size_t k = 0; k < num_layers; ++k) layers_.emplace_back(masks, Head::Gaussian, rng, output_scale);
    reset_standardization();
  }

  static AffineFlow from_parts(AdjacencyMatrix a, std::vector<MaskedMLP> layers, Vector loc, Vector scale) {
    AffineFlow f;
    f.adjacency_ = std::move(a);
    f.layers_ = std::move(layers);
    f.loc_ = std::move(loc);
    f.scale_ = std::move(scale);
    f.check();
    return f;
  }

  std::size_t dim() const { return adjacency_.dim(); }
  std::size_t num_layers() const { return layers_.size(); }
  const AdjacencyMatrix& adjacency() const noexcept { return adjacency_; }
  const std::vector<MaskedMLP>& layers() const noexcept { return layers_; }
  std::vector<MaskedMLP>& layers() noexcept { return layers_; }
  const Vector& loc() const noexcept { return loc_; }
  const Vector& scale() const noexcept { return scale_; }

  void reset_standardization() {
    loc_ = Vector::Zero(static_cast<Eigen::Index>(dim()));
    scale_ = Vector::Ones(static_cast<Eigen::Index>(dim()));
  }

  /// Fixed per-feature affine pre-map (x - loc) / scale, part of the density.
  void set_standardization(Vector loc, Vector scale) {
    if (loc.size() != scale.size() || static_cast<std::size_t>(loc.size()) != dim() ||
        !(scale.array() > 0).all() || !loc.allFinite() || !scale.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "standardization needs d finite locations and positive scales");
    }
    loc_ = std::move(loc);
    scale_ = std::move(scale);
  }

  /// Columns of x are samples. Returns z and log|det dz/dx| per sample.
  std::pair<Matrix, Vector> to_noise(const Matrix& x) const {
    check_input(x);
    Matrix u = standardize(x);
    Vector log_det = Vector::Constant(x.cols(), -scale_.array().log().sum());
    for (const auto& cond : layers_) {
      const auto [s, t] = split_output(cond.forward(u));
      u = ((u - t).array() * (-s.array()).exp()).matrix();
      log_det -= s.colwise().sum().transpose();
    }
    return {std::move(u), std::move(log_det)};
  }

  /// Inverse of to_noise.
  Matrix from_noise(const Matrix& z) const { return reconstruct(z, {}); }

  /// Sequential inversion, coordinates outer and layers inner. A pinned coordinate takes
  /// its data value from the pin instead of from z; every later coordinate is then
  /// rebuilt from z given the pinned prefix.
  Matrix reconstruct(const Matrix& z, std::span<const Pin> pins) const {
    std::vector<char> pinned(dim(), 0);
    Matrix values = Matrix::Zero(static_cast<Eigen::Index>(dim()), z.cols());
    for (const auto& p : pins) {
      if (p.index >= dim()) throw Error(ErrorCode::InvalidArgument, "pin index out of range");
      pinned[p.index] = 1;
      values.row(static_cast<Eigen::Index>(p.index)).setConstant(p.value);
    }
    return reconstruct(z, pinned, values);
  }

  /// Per-sample pins: rows of `values` (data space, one column per sample) are used for
  /// the coordinates flagged in `pinned`.
  Matrix reconstruct(const Matrix& z, const std::vector<char>& pinned, const Matrix& values) const {
    check_input(z);
    if (pinned.size() != dim() || values.rows() != z.rows() || values.cols() != z.cols()) {
      throw Error(ErrorCode::DimMismatch, "pinned values do not match the noise batch");
    }
    const auto d = static_cast<Eigen::Index>(dim());
    const std::size_t K = layers_.size();
    std::vector<Matrix> u(K + 1, Matrix::Zero(d, z.cols()));  // u[0] data side, u[K] noise side
    for (Eigen::Index c = 0; c < d; ++c) {
      if (pinned[static_cast<std::size_t>(c)]) {
        u[0].row(c) = ((values.row(c).array() - loc_(c)) / scale_(c)).matrix();
        for (std::size_t k = 1; k <= K; ++k) {
          const auto [s, t] = coordinate_params(k - 1, u[k - 1], c);
          u[k].row(c) = ((u[k - 1].row(c) - t).array() * (-s.array()).exp()).matrix();
        }
      } else {
        u[K].row(c) = z.row(c);
        for (std::size_t k = K; k >= 1; --k) {
          const auto [s, t] = coordinate_params(k - 1, u[k - 1], c);
          u[k - 1].row(c) = (u[k].row(c).array() * s.array().exp()).matrix() + t;
        }
      }
    }
    Matrix x = unstandardize(u[0]);
    for (Eigen::Index c = 0; c < d; ++c) {
      if (pinned[static_cast<std::size_t>(c)]) x.row(c) = values.row(c);
    }
    return x;
  }

  /// Per-sample negative log-likelihood.
  Vector sample_nll(const Matrix& x) const {
    const auto [z, log_det] = to_noise(x);
    const double c = static_cast<double>(dim()) * kHalfLog2Pi;
    return (0.5 * z.colwise().squaredNorm().transpose().array() + c - log_det.array()).matrix();
  }

  double nll(const Vector& x) const { return sample_nll(Matrix(x))(0); }

  /// Mean NLL over the batch and gradients for every conditioner.
  double loss_and_gradients(const Matrix& x, std::vector<Gradients>& grads) const {
    check_input(x);
    if (x.cols() == 0) throw Error(ErrorCode::InvalidArgument, "empty batch");
    const std::size_t K = layers_.size();
    const auto d = static_cast<Eigen::Index>(dim());
    std::vector<MaskedMLP::Cache> caches(K);
    std::vector<Matrix> raw(K), us(K + 1);
    us[0] = standardize(x);
    double log_det = -scale_.array().log().sum() * static_cast<double>(x.cols());
    for (std::size_t k = 0; k < K; ++k) {
      raw[k] = layers_[k].forward(us[k], caches[k]);
      const auto [s, t] = split_output(raw[k]);
      us[k + 1] = ((us[k] - t).array() * (-s.array()).exp()).matrix();
      log_det -= s.sum();
    }
    const double inv_n = 1.0 / static_cast<double>(x.cols());
    const double loss = (0.5 * us[K].squaredNorm() - log_det) * inv_n + static_cast<double>(d) * kHalfLog2Pi;

    grads.assign(K, Gradients{});
    Matrix g = us[K] * inv_n;  // dL/du_K
    for (std::size_t k = K; k-- > 0;) {
      const auto [s, t] = split_output(raw[k]);
      const Matrix es = (-s.array()).exp().matrix();
      Matrix grad_out(2 * d, x.cols());
      const auto inside = ((raw[k].topRows(d).array() > kLogScaleMin) &&
                           (raw[k].topRows(d).array() < kLogScaleMax)).cast<double>();
      grad_out.topRows(d) = ((-g.array() * us[k + 1].array() + inv_n) * inside).matrix();
      grad_out.bottomRows(d) = (-g.array() * es.array()).matrix();
      Matrix g_in;
      grads[k] = layers_[k].backward(caches[k], grad_out, &g_in);
      g = (g.array() * es.array()).matrix() + g_in;
    }
    return loss;
  }

  Matrix sample(std::size_t n, Rng& rng) const {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
    return from_noise(standard_normal(dim(), n, rng)).transpose();
  }

  static Matrix standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    std::normal_distribution<double> g;
    Matrix z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = g(rng);
    }
    return z;
  }

  bool masks_respected() const {
    for (const auto& l : layers_) if (!l.masks_respected()) return false;
    return true;
  }

 private:
  std::pair<Matrix, Matrix> split_output(const Matrix& out) const {
    const auto d = static_cast<Eigen::Index>(dim());
    return {out.topRows(d).unaryExpr([](double v) { return clamp_log_scale(v); }), out.bottomRows(d)};
  }

  std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> coordinate_params(std::size_t k, const Matrix& input,
                                                                       Eigen::Index c) const {
    const Matrix out = layers_[k].forward(input);
    const auto d = static_cast<Eigen::Index>(dim());
    return {out.row(c).unaryExpr([](double v) { return clamp_log_scale(v); }), out.row(d + c)};
  }

  Matrix standardize(const Matrix& x) const {
    return ((x.colwise() - loc_).array().colwise() / scale_.array()).matrix();
  }
  Matrix unstandardize(const Matrix& u) const {
    return ((u.array().colwise() * scale_.array()).matrix().colwise() + loc_);
  }

  void check_input(const Matrix& x) const {
    if (static_cast<std::size_t>(x.rows()) != dim()) {
      throw Error(ErrorCode::DimMismatch, "input has " + std::to_string(x.rows()) + " rows, flow has d=" +
                                              std::to_string(dim()));
    }
    if (!x.allFinite()) throw Error(ErrorCode::NonFiniteInput, "flow input is not finite");
  }

  void check() const {
    if (layers_.empty()) throw Error(ErrorCode::InvalidArgument, "flow needs at least one layer");
    for (const auto& l : layers_) {
      if (l.input_dim() != dim() || l.output_dim() != 2 * dim()) {
        throw Error(ErrorCode::ShapeMismatch, "conditioner shape does not match the adjacency");
      }
    }
    if (static_cast<std::size_t>(loc_.size()) != dim() || static_cast<std::size_t>(scale_.size()) != dim()) {
      throw Error(ErrorCode::ShapeMismatch, "standardization has the wrong length");
    }
  }

  AdjacencyMatrix adjacency_ = AdjacencyMatrix::zeros(1);
  std::vector<MaskedMLP> layers_;
  Vector loc_, scale_;
};

/// Flow whose first layer is exactly the linear SEM x = W x + eps (s = 0, t = W x) and
/// whose remaining layers are identities, so to_noise(x) recovers eps.
inline AffineFlow linear_sem_flow(const Matrix& weights, std::size_t num_layers = 1) {
  const auto d = weights.rows();
  IntMatrix pattern = (weights.array() != 0.0).cast<std::int64_t>();
  const AdjacencyMatrix a(pattern);
  std::vector<MaskedMLP> layers;
  for (std::size_t k = 0; k < std::max<std::size_t>(1, num_layers); ++k) {
    MaskedLayer layer;
    layer.mask = Matrix(2 * d, d);
    layer.mask << pattern.cast<double>(), pattern.cast<double>();
    layer.weight = Matrix::Zero(2 * d, d);
    if (k == 0) layer.weight.bottomRows(d) = weights;
    layer.bias = Vector::Zero(2 * d);
    layers.push_back(MaskedMLP::from_layers({layer}, Head::Gaussian));
  }
  return AffineFlow::from_parts(a, std::move(layers), Vector::Zero(d), Vector::Ones(d));
}

inline double mean_nll(const AffineFlow& flow, const Matrix& cols) {
  return cols.cols() == 0 ? 0.0 : flow.sample_nll(cols).mean();
}

/// Per-feature mean and standard deviation of the given rows.
/// Maximum-likelihood training of all conditioners. With `standardize`, the flow first
/// adopts the training split's per-feature moments as its fixed pre-map.
inline TrainResult train_flow(AffineFlow& flow, const Dataset& data, const TrainConfig& cfg,
                              bool standardize = true) {
  if (data.kind != DataKind::Real) throw Error(ErrorCode::InvalidArgument, "flows need a real-valued dataset");
  if (data.dim() != flow.dim()) throw Error(ErrorCode::DimMismatch, "dataset width differs from the flow");
  if (standardize && !data.split.train.empty()) {
    auto [loc, scale] = feature_moments(data.samples, data.split.train);
    flow.set_standardization(std::move(loc), std::move(scale));
  }
  const Matrix tr = gather_columns(data.samples, data.split.train);
  const Matrix va = gather_columns(data.samples, data.split.val);
  std::vector<AdamW> opts;
  for (const auto& l : flow.layers()) opts.emplace_back(l, cfg.adamw());
  std::vector<Gradients> g;
  return run_training(
      flow, tr, va, cfg,
      [&](AffineFlow& f, const Matrix& batch, double lr) {
        const double loss = f.loss_and_gradients(batch, g);
        for (std::size_t k = 0; k < f.layers().size(); ++k) opts[k].step(f.layers()[k], g[k], lr);
        return loss;
      },
      [](const AffineFlow& f, const Matrix& cols) { return mean_nll(f, cols); });
}

inline MeanWithError test_nll(const AffineFlow& flow, const Dataset& data) {
  return mean_with_stderr(flow.sample_nll(gather_columns(data.samples, data.split.test)));
}

inline Json flow_to_json(const AffineFlow& flow) {
  Json j;
  j["format"] = "strnn-flow";
  j["version"] = kToolVersion;
  j["adjacency"] = format_matrix(flow.adjacency().entries());
  j["loc"] = std::vector<double>(flow.loc().data(), flow.loc().data() + flow.loc().size());
  j["scale"] = std::vector<double>(flow.scale().data(), flow.scale().data() + flow.scale().size());
  Json layers = Json::array();
  for (const auto& l : flow.layers()) layers.push_back(mlp_to_json(l));
  j["layers"] = layers;
  return j;
}

inline AffineFlow flow_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "strnn-flow") throw Error(ErrorCode::ParseError, "not a flow checkpoint");
    std::vector<MaskedMLP> layers;
    for (const auto& l : j.at("layers")) layers.push_back(mlp_from_json(l));
    const auto loc = j.at("loc").get<std::vector<double>>();
    const auto scale = j.at("scale").get<std::vector<double>>();
    return AffineFlow::from_parts(parse_adjacency(j.at("adjacency").get<std::string>()), std::move(layers),
                                  Eigen::Map<const Vector>(loc.data(), static_cast<Eigen::Index>(loc.size())),
                                  Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size())));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed flow checkpoint: ") + e.what());
  }
}

inline void save_flow(const std::filesystem::path& path, const AffineFlow& flow) {
  write_json_file(path, flow_to_json(flow));
}

inline AffineFlow load_flow(const std::filesystem::path& path) { return flow_from_json(read_json_file(path)); }

}  // namespace strnn
