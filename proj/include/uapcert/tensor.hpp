#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uapcert {

/// Dense n-dimensional array of doubles, flat row-major storage.
/// The single value carrier for inputs, logits, weights and gradients.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (numel_of(shape_) != data_.size())
      throw std::invalid_argument("Tensor: shape/data size mismatch");
  }

  static Tensor zeros(std::vector<std::size_t> shape) {
    std::size_t n = numel_of(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
  }
  static Tensor full(std::vector<std::size_t> shape, double v) {
    std::size_t n = numel_of(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v));
  }
  static Tensor vec(std::vector<double> data) {
    std::size_t n = data.size();
    return Tensor({n}, std::move(data));
  }
  static Tensor scalar(double v) { return Tensor({}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool is_scalar() const { return data_.size() == 1 && shape_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  // 2-d accessor, row-major
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  static std::size_t numel_of(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Shared numeric kernels. Both the value-level interval code and the autodiff
// graph call these, so the two paths produce bitwise-identical results.
// ---------------------------------------------------------------------------
namespace kernels {

// y = W x, W is [m x n], x is [n]
inline void matvec(const Tensor& w, const double* x, double* y) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = wd + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

// y = |W| x
inline void abs_matvec(const Tensor& w, const double* x, double* y) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = wd + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += std::fabs(row[j]) * x[j];
    y[i] = acc;
  }
}

// y += W^T g  (gradient of matvec w.r.t. x)
inline void matvec_t_acc(const Tensor& w, const double* g, double* y) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = wd + i * n;
    const double gi = g[i];
    for (std::size_t j = 0; j < n; ++j) y[j] += row[j] * gi;
  }
}

// y += |W|^T g
inline void abs_matvec_t_acc(const Tensor& w, const double* g, double* y) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = wd + i * n;
    const double gi = g[i];
    for (std::size_t j = 0; j < n; ++j) y[j] += std::fabs(row[j]) * gi;
  }
}

// gW += outer(g, x)
inline void outer_acc(const double* g, std::size_t m, const double* x, std::size_t n,
                      double* gw) {
  for (std::size_t i = 0; i < m; ++i) {
    const double gi = g[i];
    double* row = gw + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += gi * x[j];
  }
}

// gW += sign(W) . outer(g, x); sign(0) = 0
inline void signed_outer_acc(const Tensor& w, const double* g, const double* x,
                             double* gw) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double gi = g[i];
    const double* wrow = wd + i * n;
    double* grow = gw + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double s = wrow[j] > 0.0 ? 1.0 : (wrow[j] < 0.0 ? -1.0 : 0.0);
      grow[j] += s * gi * x[j];
    }
  }
}

inline double relu(double v) { return v > 0.0 ? v : 0.0; }
// Subgradient convention: 0 at the kink.
inline double relu_grad(double v) { return v > 0.0 ? 1.0 : 0.0; }

}  // namespace kernels

inline std::size_t argmax_lowest(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.numel(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

}  // namespace uapcert
