#pragma once

#include "refvae/container.hpp"
#include "refvae/layers.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace refvae {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  ///< decoupled (AdamW)
};

/// Adam with decoupled weight decay over a fixed parameter list.
template <typename S>
class Adam {
 public:
  Adam(ParamList<S> params, AdamOptions opt) : params_(std::move(params)), opt_(opt) {
    for (const auto& [name, p] : params_) {
      m_.push_back(MatrixX<S>::Zero(p.value().data.rows(), p.value().data.cols()));
      v_.push_back(MatrixX<S>::Zero(p.value().data.rows(), p.value().data.cols()));
    }
  }

  void zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
  }

  /// One update; parameters without a gradient are treated as having zero
  /// gradient (moments still decay, weight decay still applies).
  void step() {
    ++steps_;
    const S b1 = static_cast<S>(opt_.beta1), b2 = static_cast<S>(opt_.beta2);
    const S c1 = S(1) - static_cast<S>(std::pow(opt_.beta1, static_cast<double>(steps_)));
    const S c2 = S(1) - static_cast<S>(std::pow(opt_.beta2, static_cast<double>(steps_)));
    const S lr = static_cast<S>(opt_.lr), eps = static_cast<S>(opt_.eps), wd = static_cast<S>(opt_.weight_decay);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Var<S>& p = params_[i].second;
      MatrixX<S>& value = p.mutable_value().data;
      if (p.has_grad()) {
        m_[i] = b1 * m_[i] + (S(1) - b1) * p.grad();
        v_[i] = b2 * v_[i] + (S(1) - b2) * p.grad().cwiseAbs2();
      } else {
        m_[i] *= b1;
        v_[i] *= b2;
      }
      value.array() -= lr * ((m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps) + wd * value.array());
    }
  }

  long steps() const { return steps_; }
  void set_steps(long s) { steps_ = s; }
  const ParamList<S>& params() const { return params_; }

  void store(const std::string& prefix, ArrayContainer& out) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const Tensor<S>& shape = params_[i].second.value();
      out.arrays[prefix + ".m." + params_[i].first] = to_named_array(Tensor<S>(shape.height, shape.width, m_[i]));
      out.arrays[prefix + ".v." + params_[i].first] = to_named_array(Tensor<S>(shape.height, shape.width, v_[i]));
    }
  }

  void load(const std::string& prefix, const ArrayContainer& in) {
    std::vector<MatrixX<S>> m, v;
    for (const auto& [name, p] : params_) {
      const Tensor<S> tm = from_named_array<S>(in.array(prefix + ".m." + name));
      const Tensor<S> tv = from_named_array<S>(in.array(prefix + ".v." + name));
      if (!tm.same_shape(p.value()) || !tv.same_shape(p.value())) throw FormatError("optimizer state shape mismatch for " + name);
      m.push_back(tm.data);
      v.push_back(tv.data);
    }
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  ParamList<S> params_;
  AdamOptions opt_;
  std::vector<MatrixX<S>> m_;
  std::vector<MatrixX<S>> v_;
  long steps_ = 0;
};

}  // namespace refvae
