#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "uapcert/tensor.hpp"

namespace uapcert {

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so node ids are already a topological order; backward() walks them once
/// in reverse. A graph instance is single-threaded.
class Graph {
 public:
  using Id = int;

  enum class Op : std::uint8_t {
    Leaf,            // constant or parameter
    Add,             // a + b, same shape
    Sub,             // a - b
    Scale,           // k * a
    MatVec,          // W x
    AbsMatVec,       // |W| x
    Relu,            // max(a, 0) elementwise
    RowDiff,         // M[i] = W[i] - W[y], row y zeroed
    VecDiff,         // d[i] = b[i] - b[y], entry y zeroed
    SoftplusSumExcl, // ln(1 + sum_{i != y} exp(m_i)), scalar
    CrossEntropy,    // logsumexp(o) - o[y], scalar
  };

  Id leaf(Tensor v) { return push(Op::Leaf, -1, -1, std::move(v)); }

  Id param(Tensor v) {
    Id id = push(Op::Leaf, -1, -1, std::move(v));
    param_ids_.push_back(id);
    return id;
  }

  Id add(Id a, Id b) {
    require_same_shape(a, b, "add");
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
    return push(Op::Add, a, b, std::move(out));
  }

  Id sub(Id a, Id b) {
    require_same_shape(a, b, "sub");
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
    return push(Op::Sub, a, b, std::move(out));
  }

  Id scale(Id a, double k) {
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= k;
    Id id = push(Op::Scale, a, -1, std::move(out));
    nodes_[id].k = k;
    return id;
  }

  Id matvec(Id w, Id x) {
    const Tensor& vw = val(w);
    const Tensor& vx = val(x);
    if (vw.shape().size() != 2 || vx.numel() != vw.cols())
      throw std::invalid_argument("matvec: dimension mismatch");
    Tensor out = Tensor::zeros({vw.rows()});
    kernels::matvec(vw, vx.data().data(), out.data().data());
    return push(Op::MatVec, w, x, std::move(out));
  }

  Id abs_matvec(Id w, Id x) {
    const Tensor& vw = val(w);
    const Tensor& vx = val(x);
    if (vw.shape().size() != 2 || vx.numel() != vw.cols())
      throw std::invalid_argument("abs_matvec: dimension mismatch");
    Tensor out = Tensor::zeros({vw.rows()});
    kernels::abs_matvec(vw, vx.data().data(), out.data().data());
    return push(Op::AbsMatVec, w, x, std::move(out));
  }

  Id relu(Id a) {
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = kernels::relu(out[i]);
    return push(Op::Relu, a, -1, std::move(out));
  }

  Id row_diff(Id w, int y) {
    const Tensor& vw = val(w);
    const std::size_t m = vw.rows(), n = vw.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      if (static_cast<int>(i) == y) continue;
      for (std::size_t j = 0; j < n; ++j)
        out.at(i, j) = vw.at(i, j) - vw.at(static_cast<std::size_t>(y), j);
    }
    Id id = push(Op::RowDiff, w, -1, std::move(out));
    nodes_[id].cls = y;
    return id;
  }

  Id vec_diff(Id b, int y) {
    const Tensor& vb = val(b);
    Tensor out = Tensor::zeros({vb.numel()});
    for (std::size_t i = 0; i < vb.numel(); ++i)
      if (static_cast<int>(i) != y) out[i] = vb[i] - vb[static_cast<std::size_t>(y)];
    Id id = push(Op::VecDiff, b, -1, std::move(out));
    nodes_[id].cls = y;
    return id;
  }

  // ln(1 + sum_{i != y} exp(m_i)), evaluated via a shifted sum so large
  // margins cannot overflow.
  Id softplus_sum_excl(Id m, int y) {
    const Tensor& vm = val(m);
    double mx = 0.0;
    for (std::size_t i = 0; i < vm.numel(); ++i)
      if (static_cast<int>(i) != y && vm[i] > mx) mx = vm[i];
    double s = std::exp(-mx);
    for (std::size_t i = 0; i < vm.numel(); ++i)
      if (static_cast<int>(i) != y) s += std::exp(vm[i] - mx);
    Id id = push(Op::SoftplusSumExcl, m, -1, Tensor::scalar(mx + std::log(s)));
    nodes_[id].cls = y;
    return id;
  }

  Id cross_entropy(Id o, int y) {
    const Tensor& vo = val(o);
    if (y < 0 || static_cast<std::size_t>(y) >= vo.numel())
      throw std::invalid_argument("cross_entropy: label out of range");
    double mx = vo[0];
    for (std::size_t i = 1; i < vo.numel(); ++i) mx = std::max(mx, vo[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < vo.numel(); ++i) s += std::exp(vo[i] - mx);
    double loss = mx + std::log(s) - vo[static_cast<std::size_t>(y)];
    Id id = push(Op::CrossEntropy, o, -1, Tensor::scalar(loss));
    nodes_[id].cls = y;
    return id;
  }

  const Tensor& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad(Id id) const { return grads_[static_cast<std::size_t>(id)]; }
  const std::vector<Id>& params() const { return param_ids_; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss node. Each node is visited exactly once.
  void backward(Id loss) {
    const auto n = static_cast<std::size_t>(loss) + 1;
    if (loss < 0 || n > nodes_.size())
      throw std::invalid_argument("backward: bad loss node");
    if (nodes_[static_cast<std::size_t>(loss)].value.numel() != 1)
      throw std::invalid_argument("backward: loss node must be scalar");
    grads_.assign(nodes_.size(), Tensor());
    for (std::size_t i = 0; i < n; ++i)
      grads_[i] = Tensor::zeros(nodes_[i].value.shape());
    grads_[static_cast<std::size_t>(loss)][0] = 1.0;
    for (std::size_t idx = n; idx-- > 0;) accumulate(static_cast<Id>(idx));
  }

 private:
  struct Node {
    Op op;
    Id a = -1, b = -1;
    int cls = -1;   // class index for RowDiff/VecDiff/losses
    double k = 0.0; // Scale factor
    Tensor value;
  };

  Id push(Op op, Id a, Id b, Tensor v) {
    nodes_.push_back(Node{op, a, b, -1, 0.0, std::move(v)});
    return static_cast<Id>(nodes_.size() - 1);
  }

  const Tensor& val(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  void require_same_shape(Id a, Id b, const char* what) const {
    if (!val(a).same_shape(val(b)))
      throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }

  void accumulate(Id id) {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    const Tensor& g = grads_[static_cast<std::size_t>(id)];
    switch (nd.op) {
      case Op::Leaf:
        break;
      case Op::Add: {
        Tensor& ga = grads_[static_cast<std::size_t>(nd.a)];
        Tensor& gb = grads_[static_cast<std::size_t>(nd.b)];
        for (std::size_t i = 0; i < g.numel(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::Sub: {
        Tensor& ga = grads_[static_cast<std::size_t>(nd.a)];
        Tensor& gb = grads_[static_cast<std::size_t>(nd.b)];
        for (std::size_t i = 0; i < g.numel(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::Scale: {
        Tensor& ga = grads_[static_cast<std::size_t>(nd.a)];
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += nd.k * g[i];
        break;
      }
      case Op::MatVec: {
        const Tensor& w = val(nd.a);
        const Tensor& x = val(nd.b);
        Tensor& gw = grads_[static_cast<std::size_t>(nd.a)];
        Tensor& gx = grads_[static_cast<std::size_t>(nd.b)];
        kernels::outer_acc(g.data().data(), w.rows(), x.data().data(), w.cols(),
                           gw.data().data());
        kernels::matvec_t_acc(w, g.data().data(), gx.data().data());
        break;
      }
      case Op::AbsMatVec: {
        const Tensor& w = val(nd.a);
        const Tensor& x = val(nd.b);
        Tensor& gw = grads_[static_cast<std::size_t>(nd.a)];
        Tensor& gx = grads_[static_cast<std::size_t>(nd.b)];
        kernels::signed_outer_acc(w, g.data().data(), x.data().data(),
                                  gw.data().data());
        kernels::abs_matvec_t_acc(w, g.data().data(), gx.data().data());
        break;
      }
      case Op::Relu: {
        const Tensor& x = val(nd.a);
        Tensor& ga = grads_[static_cast<std::size_t>(nd.a)];
        for (std::size_t i = 0; i < g.numel(); ++i)
          ga[i] += kernels::relu_grad(x[i]) * g[i];
        break;
      }
      case Op::RowDiff: {
        const Tensor& w = val(nd.a);
        Tensor& gw = grads_[static_cast<std::size_t>(nd.a)];
        const std::size_t m = w.rows(), n = w.cols();
        const auto y = static_cast<std::size_t>(nd.cls);
        for (std::size_t i = 0; i < m; ++i) {
          if (i == y) continue;
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = g[i * n + j];
            gw.at(i, j) += gij;
            gw.at(y, j) -= gij;
          }
        }
        break;
      }
      case Op::VecDiff: {
        const Tensor& b = val(nd.a);
        Tensor& gb = grads_[static_cast<std::size_t>(nd.a)];
        const auto y = static_cast<std::size_t>(nd.cls);
        for (std::size_t i = 0; i < b.numel(); ++i) {
          if (i == y) continue;
          gb[i] += g[i];
          gb[y] -= g[i];
        }
        break;
      }
      case Op::SoftplusSumExcl: {
        const Tensor& m = val(nd.a);
        Tensor& gm = grads_[static_cast<std::size_t>(nd.a)];
        double mx = 0.0;
        for (std::size_t i = 0; i < m.numel(); ++i)
          if (static_cast<int>(i) != nd.cls && m[i] > mx) mx = m[i];
        double s = std::exp(-mx);
        for (std::size_t i = 0; i < m.numel(); ++i)
          if (static_cast<int>(i) != nd.cls) s += std::exp(m[i] - mx);
        const double g0 = g[0];
        for (std::size_t i = 0; i < m.numel(); ++i)
          if (static_cast<int>(i) != nd.cls)
            gm[i] += g0 * std::exp(m[i] - mx) / s;
        break;
      }
      case Op::CrossEntropy: {
        const Tensor& o = val(nd.a);
        Tensor& go = grads_[static_cast<std::size_t>(nd.a)];
        double mx = o[0];
        for (std::size_t i = 1; i < o.numel(); ++i) mx = std::max(mx, o[i]);
        double s = 0.0;
        for (std::size_t i = 0; i < o.numel(); ++i) s += std::exp(o[i] - mx);
        const double g0 = g[0];
        for (std::size_t i = 0; i < o.numel(); ++i) {
          double p = std::exp(o[i] - mx) / s;
          go[i] += g0 * (p - (static_cast<int>(i) == nd.cls ? 1.0 : 0.0));
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<Id> param_ids_;
};

}  // namespace uapcert
