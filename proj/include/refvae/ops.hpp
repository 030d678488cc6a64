#pragma once

#include "refvae/autograd.hpp"
#include "refvae/resample.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace refvae {

enum class Padding { Reflect, Zero };

struct ConvSpec {
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  Padding padding = Padding::Reflect;

  int out_size(int n) const { return (n + 2 * pad - kernel) / stride + 1; }
};

namespace detail {

inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
  return i;
}

/// Source pixel for each (output pixel, kernel tap); -1 marks zero padding.
inline Eigen::MatrixXi gather_table(int h, int w, const ConvSpec& spec) {
  const int oh = spec.out_size(h), ow = spec.out_size(w), kk = spec.kernel * spec.kernel;
  Eigen::MatrixXi table(static_cast<Eigen::Index>(oh) * ow, kk);
  for (int ky = 0; ky < spec.kernel; ++ky) {
    for (int kx = 0; kx < spec.kernel; ++kx) {
      const int t = ky * spec.kernel + kx;
      for (int oy = 0; oy < oh; ++oy) {
        int iy = oy * spec.stride - spec.pad + ky;
        bool inside_y = iy >= 0 && iy < h;
        if (spec.padding == Padding::Reflect) {
          iy = reflect_index(iy, h);
          inside_y = true;
        }
        for (int ox = 0; ox < ow; ++ox) {
          int ix = ox * spec.stride - spec.pad + kx;
          bool inside_x = ix >= 0 && ix < w;
          if (spec.padding == Padding::Reflect) {
            ix = reflect_index(ix, w);
            inside_x = true;
          }
          table(static_cast<Eigen::Index>(oy) * ow + ox, t) = (inside_y && inside_x) ? iy * w + ix : -1;
        }
      }
    }
  }
  return table;
}

template <typename S>
Var<S> unary(const Var<S>& a, Tensor<S> out, std::function<MatrixX<S>(const Node<S>&, const MatrixX<S>&)> dfn) {
  auto an = a.node();
  return Var<S>::from_op(std::move(out), {a}, [an, dfn](Node<S>& self) { an->accumulate(dfn(self, self.grad)); });
}

}  // namespace detail

/// 2-D convolution of an h×w×cin grid with a (cin*k*k) × cout weight and
/// 1 × cout bias, via im2col and one GEMM.
template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, const ConvSpec& spec) {
  const Tensor<S>& in = x.value();
  const int cin = in.channels(), kk = spec.kernel * spec.kernel;
  const MatrixX<S>& wm = weight.value().data;
  if (wm.rows() != static_cast<Eigen::Index>(cin) * kk) {
    throw std::invalid_argument("conv2d: weight expects " + std::to_string(wm.rows() / kk) + " input channels, got " +
                                std::to_string(cin));
  }
  if (spec.padding == Padding::Reflect && in.height <= spec.pad && in.height > 1) {
    throw std::invalid_argument("conv2d: reflection pad exceeds input size");
  }
  const int oh = spec.out_size(in.height), ow = spec.out_size(in.width);
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv2d: input " + in.shape_string() + " too small for kernel");

  auto table = std::make_shared<Eigen::MatrixXi>(detail::gather_table(in.height, in.width, spec));
  auto col = std::make_shared<MatrixX<S>>(table->rows(), static_cast<Eigen::Index>(cin) * kk);
  for (int c = 0; c < cin; ++c) {
    const S* src = in.data.col(c).data();
    for (int t = 0; t < kk; ++t) {
      S* dst = col->col(static_cast<Eigen::Index>(c) * kk + t).data();
      const int* idx = table->col(t).data();
      for (Eigen::Index p = 0; p < table->rows(); ++p) dst[p] = idx[p] >= 0 ? src[idx[p]] : S(0);
    }
  }
  Tensor<S> out(oh, ow, MatrixX<S>((*col) * wm));
  out.data.rowwise() += bias.value().data.row(0);

  if (!weight.requires_grad()) col.reset();
  auto xn = x.node(), wn = weight.node(), bn = bias.node();
  const int h = in.height, w = in.width;
  return Var<S>::from_op(std::move(out), {x, weight, bias}, [=](Node<S>& self) {
    const MatrixX<S>& g = self.grad;
    if (wn->requires_grad) wn->accumulate(col->transpose() * g);
    if (bn->requires_grad) bn->accumulate(g.colwise().sum());
    if (xn->requires_grad) {
      const MatrixX<S> dcol = g * wn->value.data.transpose();
      MatrixX<S> dx = MatrixX<S>::Zero(static_cast<Eigen::Index>(h) * w, cin);
      for (int c = 0; c < cin; ++c) {
        S* dst = dx.col(c).data();
        for (int t = 0; t < kk; ++t) {
          const S* src = dcol.col(static_cast<Eigen::Index>(c) * kk + t).data();
          const int* idx = table->col(t).data();
          for (Eigen::Index p = 0; p < table->rows(); ++p) {
            if (idx[p] >= 0) dst[idx[p]] += src[p];
          }
        }
      }
      xn->accumulate(dx);
    }
  });
}

template <typename S>
Var<S> leaky_relu(const Var<S>& a, S slope) {
  const MatrixX<S>& v = a.value().data;
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(v.unaryExpr([slope](S x) { return x > S(0) ? x : slope * x; })));
  return detail::unary<S>(a, std::move(out), [slope](const Node<S>& self, const MatrixX<S>& g) {
    const MatrixX<S>& in = self.parents[0]->value.data;
    return MatrixX<S>(g.binaryExpr(in, [slope](S gv, S x) { return x > S(0) ? gv : slope * gv; }));
  });
}

/// Clamp to [lo, hi]; gradient passes only strictly inside the interval.
template <typename S>
Var<S> clamp(const Var<S>& a, S lo, S hi) {
  const MatrixX<S>& v = a.value().data;
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(v.cwiseMax(lo).cwiseMin(hi)));
  return detail::unary<S>(a, std::move(out), [lo, hi](const Node<S>& self, const MatrixX<S>& g) {
    const MatrixX<S>& in = self.parents[0]->value.data;
    return MatrixX<S>(g.binaryExpr(in, [lo, hi](S gv, S x) { return (x > lo && x < hi) ? gv : S(0); }));
  });
}

template <typename S>
Var<S> exp(const Var<S>& a) {
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data.array().exp().matrix()));
  return detail::unary<S>(a, std::move(out), [](const Node<S>& self, const MatrixX<S>& g) {
    return MatrixX<S>(g.cwiseProduct(self.value.data));
  });
}

template <typename S>
Var<S> abs(const Var<S>& a) {
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data.cwiseAbs()));
  return detail::unary<S>(a, std::move(out), [](const Node<S>& self, const MatrixX<S>& g) {
    const MatrixX<S>& in = self.parents[0]->value.data;
    return MatrixX<S>(g.binaryExpr(in, [](S gv, S x) { return x > S(0) ? gv : (x < S(0) ? -gv : S(0)); }));
  });
}

template <typename S>
Var<S> square(const Var<S>& a) {
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data.cwiseAbs2()));
  return detail::unary<S>(a, std::move(out), [](const Node<S>& self, const MatrixX<S>& g) {
    return MatrixX<S>(S(2) * g.cwiseProduct(self.parents[0]->value.data));
  });
}

/// log(1 + e^x), evaluated without overflow.
template <typename S>
Var<S> softplus(const Var<S>& a) {
  auto sp = [](S x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, S(0)); };
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data.unaryExpr(sp)));
  return detail::unary<S>(a, std::move(out), [](const Node<S>& self, const MatrixX<S>& g) {
    const MatrixX<S>& in = self.parents[0]->value.data;
    return MatrixX<S>(g.binaryExpr(in, [](S gv, S x) { return gv / (S(1) + std::exp(-x)); }));
  });
}

template <typename S>
Var<S> scale(const Var<S>& a, S s) {
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(s * a.value().data));
  return detail::unary<S>(a, std::move(out), [s](const Node<S>&, const MatrixX<S>& g) { return MatrixX<S>(s * g); });
}

template <typename S>
Var<S> add_scalar(const Var<S>& a, S s) {
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data.array() + s));
  return detail::unary<S>(a, std::move(out), [](const Node<S>&, const MatrixX<S>& g) { return g; });
}

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data + b.value().data));
  auto an = a.node(), bn = b.node();
  return Var<S>::from_op(std::move(out), {a, b}, [an, bn](Node<S>& self) {
    if (an->requires_grad) an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(self.grad);
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data - b.value().data));
  auto an = a.node(), bn = b.node();
  return Var<S>::from_op(std::move(out), {a, b}, [an, bn](Node<S>& self) {
    if (an->requires_grad) an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(-self.grad);
  });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(a.value().data.cwiseProduct(b.value().data)));
  auto an = a.node(), bn = b.node();
  return Var<S>::from_op(std::move(out), {a, b}, [an, bn](Node<S>& self) {
    if (an->requires_grad) an->accumulate(self.grad.cwiseProduct(bn->value.data));
    if (bn->requires_grad) bn->accumulate(self.grad.cwiseProduct(an->value.data));
  });
}

/// Mean over every entry, as a 1×1×1 result.
template <typename S>
Var<S> mean(const Var<S>& a) {
  const auto n = static_cast<S>(a.value().size());
  auto an = a.node();
  const Eigen::Index rows = a.value().data.rows(), cols = a.value().data.cols();
  return Var<S>::from_op(Tensor<S>::scalar(a.value().data.sum() / n), {a}, [an, n, rows, cols](Node<S>& self) {
    an->accumulate(MatrixX<S>::Constant(rows, cols, self.grad(0, 0) / n));
  });
}

template <typename S>
Var<S> sum(const Var<S>& a) {
  auto an = a.node();
  const Eigen::Index rows = a.value().data.rows(), cols = a.value().data.cols();
  return Var<S>::from_op(Tensor<S>::scalar(a.value().data.sum()), {a}, [an, rows, cols](Node<S>& self) {
    an->accumulate(MatrixX<S>::Constant(rows, cols, self.grad(0, 0)));
  });
}

/// Per-channel spatial mean, as a 1×1×c result.
template <typename S>
Var<S> channel_mean(const Var<S>& a) {
  const auto n = static_cast<S>(a.value().pixels());
  Tensor<S> out(1, 1, MatrixX<S>(a.value().data.colwise().sum() / n));
  const Eigen::Index rows = a.value().pixels();
  return detail::unary<S>(a, std::move(out), [n, rows](const Node<S>&, const MatrixX<S>& g) {
    return MatrixX<S>((g / n).replicate(rows, 1));
  });
}

/// Per-channel spatial (population) variance, as a 1×1×c result.
template <typename S>
Var<S> channel_var(const Var<S>& a) {
  const auto n = static_cast<S>(a.value().pixels());
  const MatrixX<S> centered = a.value().data.rowwise() - a.value().data.colwise().mean();
  Tensor<S> out(1, 1, MatrixX<S>(centered.colwise().squaredNorm() / n));
  return detail::unary<S>(a, std::move(out), [n, centered](const Node<S>&, const MatrixX<S>& g) {
    return MatrixX<S>((centered * (S(2) / n)).array().rowwise() * g.row(0).array());
  });
}

/// Scales each pixel's channel vector to unit length: v / (|v| + eps).
template <typename S>
Var<S> unit_normalize(const Var<S>& a, S eps = S(1e-10)) {
  const MatrixX<S>& v = a.value().data;
  const Eigen::Matrix<S, Eigen::Dynamic, 1> norms = v.rowwise().norm();
  const Eigen::Matrix<S, Eigen::Dynamic, 1> denom = norms.array() + eps;
  Tensor<S> out(a.value().height, a.value().width, MatrixX<S>(v.array().colwise() / denom.array()));
  return detail::unary<S>(a, std::move(out), [norms, denom](const Node<S>& self, const MatrixX<S>& g) {
    const MatrixX<S>& in = self.parents[0]->value.data;
    MatrixX<S> dx = g.array().colwise() / denom.array();
    const Eigen::Matrix<S, Eigen::Dynamic, 1> dots = in.cwiseProduct(g).rowwise().sum();
    for (Eigen::Index p = 0; p < in.rows(); ++p) {
      if (norms(p) > S(0)) dx.row(p) -= in.row(p) * (dots(p) / (denom(p) * denom(p) * norms(p)));
    }
    return dx;
  });
}

/// Separable linear resampling of every channel plane: out = Ry · X · Rxᵀ.
template <typename S>
Var<S> resample(const Var<S>& a, const MatrixX<S>& ry, const MatrixX<S>& rx) {
  const Tensor<S>& in = a.value();
  if (ry.cols() != in.height || rx.cols() != in.width) throw std::invalid_argument("resample: weight/input mismatch");
  const int oh = static_cast<int>(ry.rows()), ow = static_cast<int>(rx.rows());
  Tensor<S> out(oh, ow, in.channels());
  for (int c = 0; c < in.channels(); ++c) out.plane(c).noalias() = ry * in.plane(c) * rx.transpose();
  const int h = in.height, w = in.width, ch = in.channels();
  return detail::unary<S>(a, std::move(out), [ry, rx, h, w, oh, ow, ch](const Node<S>&, const MatrixX<S>& g) {
    Tensor<S> dx(h, w, ch);
    for (int c = 0; c < ch; ++c) {
      Eigen::Map<const RowMajorX<S>> gp(g.col(c).data(), oh, ow);
      dx.plane(c).noalias() = ry.transpose() * gp * rx;
    }
    return dx.data;
  });
}

template <typename S>
Var<S> resize(const Var<S>& a, int out_h, int out_w, Kernel kernel) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: target size must be positive");
  if (out_h == a.value().height && out_w == a.value().width) return a;
  const MatrixX<S> ry = resample_weights(a.value().height, out_h, kernel).template cast<S>();
  const MatrixX<S> rx = resample_weights(a.value().width, out_w, kernel).template cast<S>();
  return resample(a, ry, rx);
}

/// 2×2 max pooling with stride 2 (odd trailing rows/cols are dropped).
template <typename S>
Var<S> max_pool2(const Var<S>& a) {
  const Tensor<S>& in = a.value();
  const int oh = in.height / 2, ow = in.width / 2, ch = in.channels();
  if (oh < 1 || ow < 1) throw std::invalid_argument("max_pool2: input " + in.shape_string() + " too small");
  Tensor<S> out(oh, ow, ch);
  auto argmax = std::make_shared<Eigen::MatrixXi>(static_cast<Eigen::Index>(oh) * ow, ch);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        int best = (2 * y) * in.width + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (2 * y + dy) * in.width + 2 * x + dx;
            if (in.data(idx, c) > in.data(best, c)) best = idx;
          }
        }
        (*argmax)(y * ow + x, c) = best;
        out.data(y * ow + x, c) = in.data(best, c);
      }
    }
  }
  const Eigen::Index rows = in.pixels();
  return detail::unary<S>(a, std::move(out), [argmax, rows, ch](const Node<S>&, const MatrixX<S>& g) {
    MatrixX<S> dx = MatrixX<S>::Zero(rows, ch);
    for (int c = 0; c < ch; ++c) {
      for (Eigen::Index p = 0; p < g.rows(); ++p) dx((*argmax)(p, c), c) += g(p, c);
    }
    return dx;
  });
}

/// Total variation: per site, the squared left and upper neighbour
/// differences that exist are summed and raised to `beta`; the result is the
/// mean over (site, channel) pairs having at least one neighbour.
template <typename S>
Var<S> total_variation(const Var<S>& a, S beta) {
  const Tensor<S>& in = a.value();
  const int h = in.height, w = in.width, ch = in.channels();
  if (h * w < 2) throw std::invalid_argument("total_variation: image needs at least two pixels");
  const S count = static_cast<S>((static_cast<Eigen::Index>(h) * w - 1) * ch);
  MatrixX<S> site = MatrixX<S>::Zero(in.pixels(), ch);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        S acc = 0;
        if (x > 0) acc += (in.at(y, x - 1, c) - in.at(y, x, c)) * (in.at(y, x - 1, c) - in.at(y, x, c));
        if (y > 0) acc += (in.at(y - 1, x, c) - in.at(y, x, c)) * (in.at(y - 1, x, c) - in.at(y, x, c));
        site(y * w + x, c) = acc;
      }
    }
  }
  const S value = site.unaryExpr([beta](S s) { return s > S(0) ? std::pow(s, beta) : S(0); }).sum() / count;
  auto an = a.node();
  return Var<S>::from_op(Tensor<S>::scalar(value), {a}, [an, site, beta, count, h, w, ch](Node<S>& self) {
    const Tensor<S>& v = an->value;
    const S g0 = self.grad(0, 0) / count;
    MatrixX<S> dx = MatrixX<S>::Zero(v.pixels(), ch);
    for (int c = 0; c < ch; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const S s = site(y * w + x, c);
          if (s <= S(0)) continue;
          const S outer = g0 * beta * std::pow(s, beta - S(1));
          const int p = y * w + x;
          if (x > 0) {
            const S d = v.at(y, x - 1, c) - v.at(y, x, c);
            dx(p - 1, c) += outer * S(2) * d;
            dx(p, c) -= outer * S(2) * d;
          }
          if (y > 0) {
            const S d = v.at(y - 1, x, c) - v.at(y, x, c);
            dx(p - w, c) += outer * S(2) * d;
            dx(p, c) -= outer * S(2) * d;
          }
        }
      }
    }
    an->accumulate(dx);
  });
}

/// Weighted sum of scalar results.
template <typename S>
Var<S> weighted_sum(const std::vector<Var<S>>& terms, const std::vector<S>& weights) {
  if (terms.size() != weights.size() || terms.empty()) throw std::invalid_argument("weighted_sum: size mismatch");
  Var<S> acc = scale(terms[0], weights[0]);
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, scale(terms[i], weights[i]));
  return acc;
}

}  // namespace refvae
