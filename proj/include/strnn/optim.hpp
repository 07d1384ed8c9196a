#pragma once

#include <cmath>
#include <vector>

#include "strnn/mlp.hpp"

namespace strnn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// AdamW with decoupled weight decay. After each step the network is re-masked, so
/// structurally absent weights stay exactly zero regardless of decay or momentum.
class AdamW {
 public:
  AdamW() = default;
  AdamW(const MaskedMLP& net, AdamWConfig cfg) : cfg_(cfg) {
    m_ = net.zero_gradients();
    v_ = net.zero_gradients();
  }

  void step(MaskedMLP& net, const Gradients& g, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight.array(), g.weight[l].array(), m_.weight[l].array(),
             v_.weight[l].array(), lr, bc1, bc2);
      update(layers[l].bias.array(), g.bias[l].array(), m_.bias[l].array(), v_.bias[l].array(),
             lr, bc1, bc2);
    }
    net.apply_masks();
  }

  long steps() const noexcept { return t_; }

 private:
  template <class P, class G, class M, class V>
  void update(P&& p, const G& g, M&& m, V&& v, double lr, double bc1, double bc2) const {
    p *= 1.0 - lr * cfg_.weight_decay;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.square();
    p -= lr * (m / bc1) / ((v / bc2).sqrt() + cfg_.eps);
  }

  AdamWConfig cfg_;
  Gradients m_, v_;
  long t_ = 0;
};

}  // namespace strnn
