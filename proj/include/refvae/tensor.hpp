#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace refvae {

template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
using RowMajorX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense h×w×c activation grid.
///
/// Storage is one contiguous plane per channel: `data` is (h*w) × c in
/// Eigen's default column-major order, pixel index p = y*w + x. A plane can
/// therefore be viewed in place as a row-major h×w matrix via `plane()`.
/// Parameters reuse the same type: a conv weight is (cin*k*k) × cout with
/// h = cin*k*k, w = 1.
template <typename S>
struct Tensor {
  int height = 0;
  int width = 0;
  MatrixX<S> data;

  Tensor() = default;
  Tensor(int h, int w, int c) : height(h), width(w), data(MatrixX<S>::Zero(static_cast<Eigen::Index>(h) * w, c)) {}
  Tensor(int h, int w, MatrixX<S> values) : height(h), width(w), data(std::move(values)) {
    if (data.rows() != static_cast<Eigen::Index>(h) * w) throw std::invalid_argument("Tensor: data rows must equal h*w");
  }

  int channels() const { return static_cast<int>(data.cols()); }
  Eigen::Index pixels() const { return data.rows(); }
  Eigen::Index size() const { return data.size(); }

  Eigen::Map<RowMajorX<S>> plane(int c) { return {data.col(c).data(), height, width}; }
  Eigen::Map<const RowMajorX<S>> plane(int c) const { return {data.col(c).data(), height, width}; }

  S& at(int y, int x, int c) { return data(static_cast<Eigen::Index>(y) * width + x, c); }
  S at(int y, int x, int c) const { return data(static_cast<Eigen::Index>(y) * width + x, c); }

  bool same_shape(const Tensor& o) const { return height == o.height && width == o.width && channels() == o.channels(); }

  std::string shape_string() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels());
  }

  bool all_finite() const { return data.allFinite(); }

  template <typename T>
  Tensor<T> cast() const {
    return Tensor<T>(height, width, data.template cast<T>());
  }

  static Tensor constant(int h, int w, int c, S v) {
    return Tensor(h, w, MatrixX<S>::Constant(static_cast<Eigen::Index>(h) * w, c, v));
  }

  static Tensor scalar(S v) { return constant(1, 1, 1, v); }
};

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace refvae
