#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

#include "strnn/error.hpp"
#include "strnn/factorizer.hpp"
#include "strnn/types.hpp"

namespace strnn {

/// Binary: one logit per variable. Gaussian: d means followed by d log-scales, the final
/// mask stacked twice so both halves see the same inputs.
enum class Head { Binary, Gaussian };

inline std::string_view to_string(Head h) { return h == Head::Binary ? "binary" : "gaussian"; }

/// Log-scale outputs are clamped to this range before exponentiation.
inline constexpr double kLogScaleMin = -7.0;
inline constexpr double kLogScaleMax = 7.0;

struct MaskedLayer {
  Matrix weight;  // out x in; always equal to weight ⊙ mask
  Vector bias;
  Matrix mask;    // 0/1 entries
};

/// Per-layer parameter gradients, shaped like the network's layers.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

/// Feedforward network with ReLU hidden layers whose weights are structurally zeroed by
/// binary masks. Columns of every input/output matrix are samples.
class MaskedMLP {
 public:
  MaskedMLP() = default;

  /// Builds a network from a mask set; weights are Kaiming-uniform with fan-in counted
  /// from each mask row, biases start at zero. `output_scale` shrinks the final layer.
  MaskedMLP(const MaskSet& masks, Head head, Rng& rng, double output_scale = 1.0) : head_(head) {
    if (masks.masks.empty()) throw Error(ErrorCode::ShapeMismatch, "mask set is empty");
    (void)mask_product(masks);  // shape check
    const std::size_t n = masks.size();
    layers_.reserve(n);
    for (std::size_t l = 0; l < n; ++l) {
      IntMatrix m = masks.masks[l];
      if (l + 1 == n && head == Head::Gaussian) {
        IntMatrix stacked(2 * m.rows(), m.cols());
        stacked << m, m;
        m = std::move(stacked);
      }
      MaskedLayer layer;
      layer.mask = m.cast<double>();
      layer.weight = Matrix::Zero(m.rows(), m.cols());
      layer.bias = Vector::Zero(m.rows());
      const double gain = l + 1 < n ? std::numbers::sqrt2 : output_scale;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double fan_in = std::max<double>(1.0, static_cast<double>(m.row(r).sum()));
        const double bound = gain * std::sqrt(3.0 / fan_in);
        std::uniform_real_distribution<double> unif(-bound, bound);
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          const double w = unif(rng);  // drawn for every entry so init is shape-stable
          if (m(r, c) != 0) layer.weight(r, c) = w;
        }
      }
      layers_.push_back(std::move(layer));
    }
  }

  static MaskedMLP from_layers(std::vector<MaskedLayer> layers, Head head) {
    MaskedMLP net;
    net.head_ = head;
    net.layers_ = std::move(layers);
    net.check_shapes();
    return net;
  }

  Head head() const noexcept { return head_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().weight.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(layers_.back().weight.rows()); }
  /// Number of modeled variables (d), i.e. the per-head output block size.
  std::size_t variable_dim() const {
    return head_ == Head::Gaussian ? output_dim() / 2 : output_dim();
  }

  const std::vector<MaskedLayer>& layers() const noexcept { return layers_; }
  std::vector<MaskedLayer>& layers() noexcept { return layers_; }

  /// Activations cached by forward(): inputs[l] is the input to layer l.
  struct Cache {
    std::vector<Matrix> inputs;
  };

  Matrix forward(const Matrix& x) const {
    Cache unused;
    return forward(x, unused, false);
  }

  Vector forward(const Vector& x) const { return forward(Matrix(x)).col(0); }

  Matrix forward(const Matrix& x, Cache& cache, bool keep = true) const {
    if (static_cast<std::size_t>(x.rows()) != input_dim()) {
      throw Error(ErrorCode::DimMismatch, "input has " + std::to_string(x.rows()) +
                                              " rows, network expects " +
                                              std::to_string(input_dim()));
    }
    if (keep) cache.inputs.clear();
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (keep) cache.inputs.push_back(std::move(a));
      a = l + 1 < layers_.size() ? Matrix(z.cwiseMax(0.0)) : std::move(z);
    }
    return a;
  }

  /// Reverse-mode pass for a loss whose gradient w.r.t. the outputs is `grad_out`.
  /// Optionally writes the gradient w.r.t. the network input.
  Gradients backward(const Cache& cache, const Matrix& grad_out, Matrix* grad_input = nullptr) const {
    const std::size_t n = layers_.size();
    Gradients g;
    g.weight.resize(n);
    g.bias.resize(n);
    Matrix delta = grad_out;
    for (std::size_t l = n; l-- > 0;) {
      const auto& layer = layers_[l];
      g.weight[l] = (delta * cache.inputs[l].transpose()).cwiseProduct(layer.mask);
      g.bias[l] = delta.rowwise().sum();
      if (l == 0 && grad_input == nullptr) break;
      Matrix back = layer.weight.transpose() * delta;
      if (l > 0) {
        // ReLU: input to layer l is relu(z_{l-1}); derivative 1 where positive
        delta = back.cwiseProduct((cache.inputs[l].array() > 0.0).cast<double>().matrix());
      } else {
        *grad_input = std::move(back);
      }
    }
    return g;
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (const auto& l : layers_) {
      g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
      g.bias.push_back(Vector::Zero(l.bias.size()));
    }
    return g;
  }

  /// Restores weight = weight ⊙ mask.
  void apply_masks() {
    for (auto& l : layers_) l.weight = l.weight.cwiseProduct(l.mask);
  }

  bool masks_respected() const {
    for (const auto& l : layers_) {
      if (((l.mask.array() == 0.0) && (l.weight.array() != 0.0)).any()) return false;
    }
    return true;
  }

  MaskSet mask_set() const {
    MaskSet s;
    for (const auto& l : layers_) s.masks.push_back(l.mask.cast<std::int64_t>());
    return s;
  }

  /// Path-count connectivity (outputs x inputs) implied by the masks.
  IntMatrix connectivity() const { return mask_product(mask_set()); }

  /// Optional fixed per-feature pre-map x' = (x - loc) / scale, applied by the density
  /// functions. Gaussian heads only.
  void set_standardization(Vector loc, Vector scale) {
    if (head_ != Head::Gaussian) throw Error(ErrorCode::InvalidArgument, "standardization needs a gaussian head");
    const auto d = static_cast<Eigen::Index>(variable_dim());
    if (loc.size() != d || scale.size() != d) throw Error(ErrorCode::DimMismatch, "standardization width");
    if (!loc.allFinite() || !scale.allFinite() || (scale.array() <= 0.0).any()) {
      throw Error(ErrorCode::InvalidArgument, "standardization needs finite loc and positive scale");
    }
    loc_ = std::move(loc);
    scale_ = std::move(scale);
  }
  void reset_standardization() {
    loc_.resize(0);
    scale_.resize(0);
  }
  bool standardized() const noexcept { return loc_.size() > 0; }
  const Vector& loc() const noexcept { return loc_; }
  const Vector& scale() const noexcept { return scale_; }

  Matrix standardize(const Matrix& x) const {
    if (!standardized()) return x;
    return ((x.colwise() - loc_).array().colwise() / scale_.array()).matrix();
  }
  /// Log-Jacobian correction added to every per-sample NLL.
  double log_scale_sum() const { return standardized() ? scale_.array().log().sum() : 0.0; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.mask.sum() + l.bias.size());
    return n;
  }

 private:
  void check_shapes() const {
    if (layers_.empty()) throw Error(ErrorCode::ShapeMismatch, "network has no layers");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      if (L.mask.rows() != L.weight.rows() || L.mask.cols() != L.weight.cols() ||
          L.bias.size() != L.weight.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " is inconsistent");
      }
      if (l > 0 && L.weight.cols() != layers_[l - 1].weight.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " input width");
      }
    }
    if (head_ == Head::Gaussian && output_dim() % 2 != 0) {
      throw Error(ErrorCode::ShapeMismatch, "gaussian head needs an even output width");
    }
  }

  Head head_ = Head::Binary;
  std::vector<MaskedLayer> layers_;
  Vector loc_, scale_;
};

// ---------------------------------------------------------------------------
// Density heads

inline double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }
inline double sigmoid(double v) {
  return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}
inline double clamp_log_scale(double v) { return std::clamp(v, kLogScaleMin, kLogScaleMax); }

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

/// Per-sample negative log-likelihood for a batch (columns are samples); optionally the
/// gradient of the summed NLL w.r.t. the network outputs.
inline Vector head_nll(Head head, const Matrix& out, const Matrix& x, Matrix* grad_out = nullptr) {
  const Eigen::Index d = x.rows(), n = x.cols();
  Vector nll = Vector::Zero(n);
  if (grad_out) grad_out->resize(out.rows(), n);
  if (head == Head::Binary) {
    for (Eigen::Index s = 0; s < n; ++s) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double o = out(j, s), t = x(j, s);
        nll(s) += softplus(o) - t * o;
        if (grad_out) (*grad_out)(j, s) = sigmoid(o) - t;
      }
    }
    return nll;
  }
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double mu = out(j, s), raw = out(d + j, s);
      const double ls = clamp_log_scale(raw);
      const double inv_var = std::exp(-2.0 * ls);
      const double r = x(j, s) - mu;
      nll(s) += ls + kHalfLog2Pi + 0.5 * r * r * inv_var;
      if (grad_out) {
        (*grad_out)(j, s) = -r * inv_var;
        const bool inside = raw > kLogScaleMin && raw < kLogScaleMax;
        (*grad_out)(d + j, s) = inside ? 1.0 - r * r * inv_var : 0.0;
      }
    }
  }
  return nll;
}

inline void require_binary_input(const Matrix& x) {
  if (!((x.array() == 0.0) || (x.array() == 1.0)).all()) {
    throw Error(ErrorCode::NonBinaryInput, "binary head requires 0/1 inputs");
  }
}

/// Per-sample NLL of a batch under the network's head.
inline Vector sample_nll(const MaskedMLP& net, const Matrix& x) {
  if (net.head() == Head::Binary) require_binary_input(x);
  const Matrix xs = net.standardize(x);
  return (head_nll(net.head(), net.forward(xs), xs).array() + net.log_scale_sum()).matrix();
}

inline double nll_binary(const MaskedMLP& net, const Vector& x) {
  if (net.head() != Head::Binary) throw Error(ErrorCode::InvalidArgument, "network has a gaussian head");
  return sample_nll(net, Matrix(x))(0);
}

inline double nll_gaussian(const MaskedMLP& net, const Vector& x) {
  if (net.head() != Head::Gaussian) throw Error(ErrorCode::InvalidArgument, "network has a binary head");
  return sample_nll(net, Matrix(x))(0);
}

/// Mean NLL over the batch and its exact parameter gradients.
inline double batch_loss_and_gradients(const MaskedMLP& net, const Matrix& x, Gradients& grads) {
  if (x.cols() == 0) throw Error(ErrorCode::InvalidArgument, "empty batch");
  if (net.head() == Head::Binary) require_binary_input(x);
  MaskedMLP::Cache cache;
  const Matrix xs = net.standardize(x);
  const Matrix out = net.forward(xs, cache);
  Matrix grad_out;
  const Vector nll = head_nll(net.head(), out, xs, &grad_out);
  const double inv_n = 1.0 / static_cast<double>(x.cols());
  grad_out *= inv_n;
  grads = net.backward(cache, grad_out);
  return nll.sum() * inv_n + net.log_scale_sum();
}

}  // namespace strnn
