#pragma once

#include <cstddef>
#include <vector>

#include "crossfilter/core/error.hpp"

namespace crossfilter {

/// Dense row-major matrix. Rows index frequency bins, columns index frames
/// throughout the DSP code.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  T* row(std::size_t r) { return v_.data() + r * cols_; }
  const T* row(std::size_t r) const { return v_.data() + r * cols_; }

  auto begin() { return v_.begin(); }
  auto end() { return v_.end(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> v_;
};

using MatF = Matrix<float>;
using MatD = Matrix<double>;

/// Dense channel-major 3-D tensor (channels x height x width); the CNN's
/// feature-map carrier.
template <class T>
struct Tensor3 {
  std::size_t c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor3() = default;
  Tensor3(std::size_t c_, std::size_t h_, std::size_t w_, T fill = T{})
      : c(c_), h(h_), w(w_), v(c_ * h_ * w_, fill) {}

  T& at(std::size_t ci, std::size_t hi, std::size_t wi) { return v[(ci * h + hi) * w + wi]; }
  const T& at(std::size_t ci, std::size_t hi, std::size_t wi) const {
    return v[(ci * h + hi) * w + wi];
  }
  T* plane(std::size_t ci) { return v.data() + ci * h * w; }
  const T* plane(std::size_t ci) const { return v.data() + ci * h * w; }
  std::size_t size() const { return v.size(); }
};

}  // namespace crossfilter
