#pragma once

#include "refvae/ops.hpp"
#include "refvae/random.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace refvae {

template <typename S>
using ParamList = std::vector<std::pair<std::string, Var<S>>>;

/// Convolution layer: (cin*k*k) × cout weight and 1 × cout bias.
template <typename S>
struct Conv {
  Var<S> weight;
  Var<S> bias;
  ConvSpec spec;

  int in_channels() const { return static_cast<int>(weight.value().data.rows()) / (spec.kernel * spec.kernel); }
  int out_channels() const { return weight.value().channels(); }

  Var<S> operator()(const Var<S>& x) const { return conv2d(x, weight, bias, spec); }

  void collect(const std::string& prefix, ParamList<S>& out) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
  }
};

/// He-normal initialised convolution; std = gain / sqrt(fan_in).
template <typename S>
Conv<S> make_conv(int cin, int cout, ConvSpec spec, RandomStream& rng, bool trainable, double gain = std::sqrt(2.0 / 1.04)) {
  const int fan_in = cin * spec.kernel * spec.kernel;
  const double stddev = gain / std::sqrt(static_cast<double>(fan_in));
  Tensor<S> w(fan_in, 1, cout);
  for (Eigen::Index i = 0; i < w.data.size(); ++i) w.data.data()[i] = static_cast<S>(stddev * rng.normal());
  Tensor<S> b(1, 1, cout);
  auto wrap = [trainable](Tensor<S> t) { return trainable ? Var<S>::parameter(std::move(t)) : Var<S>::constant(std::move(t)); };
  return {wrap(std::move(w)), wrap(std::move(b)), spec};
}

template <typename S>
void zero_conv(Conv<S>& conv) {
  conv.weight.mutable_value().data.setZero();
  conv.bias.mutable_value().data.setZero();
}

}  // namespace refvae
