#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "uapcert/tensor.hpp"

namespace uapcert {

enum class LayerKind : std::uint8_t { Affine = 0, Relu = 1 };

struct Layer {
  LayerKind kind;
  Tensor weight;  // [out x in], Affine only
  Tensor bias;    // [out], Affine only

  static Layer affine(Tensor w, Tensor b) {
    if (w.shape().size() != 2 || b.numel() != w.rows())
      throw std::invalid_argument("affine layer: weight/bias shapes inconsistent");
    return Layer{LayerKind::Affine, std::move(w), std::move(b)};
  }
  static Layer relu() { return Layer{LayerKind::Relu, Tensor(), Tensor()}; }
};

/// Ordered sequence of affine and ReLU layers.
struct Network {
  std::vector<Layer> layers;

  std::size_t input_dim() const {
    for (const Layer& l : layers)
      if (l.kind == LayerKind::Affine) return l.weight.cols();
    throw std::logic_error("network has no affine layer");
  }
  std::size_t output_dim() const {
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
      if (it->kind == LayerKind::Affine) return it->weight.rows();
    throw std::logic_error("network has no affine layer");
  }

  // Adjacent affine dimensions must compose.
  void validate() const {
    std::size_t cur = 0;
    bool have = false;
    for (const Layer& l : layers) {
      if (l.kind != LayerKind::Affine) continue;
      if (have && l.weight.cols() != cur)
        throw std::invalid_argument("network: affine dimensions do not compose");
      cur = l.weight.rows();
      have = true;
    }
    if (!have) throw std::invalid_argument("network: needs at least one affine layer");
  }
};

inline Tensor forward(const Network& net, const Tensor& x) {
  if (x.numel() != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  Tensor cur = x;
  for (const Layer& l : net.layers) {
    if (l.kind == LayerKind::Affine) {
      Tensor next = Tensor::zeros({l.weight.rows()});
      kernels::matvec(l.weight, cur.data().data(), next.data().data());
      for (std::size_t i = 0; i < next.numel(); ++i) next[i] += l.bias[i];
      cur = std::move(next);
    } else {
      for (std::size_t i = 0; i < cur.numel(); ++i) cur[i] = kernels::relu(cur[i]);
    }
  }
  return cur;
}

// Ties break to the lowest class index.
inline std::size_t predict(const Network& net, const Tensor& x) {
  return argmax_lowest(forward(net, x));
}

}  // namespace uapcert
