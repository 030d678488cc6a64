#pragma once

#include "refvae/generator.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace refvae {

struct LossWeights {
  double content = 1.0;
  double style = 10.0;
  double lpips = 1.0;
  double tv = 1.0;
  double kl = 1.0;
  double adversarial = 1.0;
  double tv_beta = 1.0;

  void validate() const;
};

/// One value per objective; the order matches the loss CSV columns.
struct LossParts {
  double content = 0.0;
  double style = 0.0;
  double lpips = 0.0;
  double tv = 0.0;
  double kl = 0.0;
  double adversarial = 0.0;
};

/// Weighted sum of the parts; throws naming the first non-finite term.
double total_loss(const LossWeights& w, const LossParts& parts);

/// Mean over the patch map of log(1 - D(sr)) = -softplus(logit). Always <= 0.
template <typename S>
Var<S> adversarial_g_loss(const Discriminator<S>& disc, const Var<S>& sr) {
  return scale(mean(softplus(disc.logits(sr))), S(-1));
}

/// Mean patch BCE with real → 1 and fake → 0, averaged over both halves.
template <typename S>
Var<S> adversarial_d_loss(const Discriminator<S>& disc, const Var<S>& real, const Var<S>& fake) {
  require_same_shape(real.value(), fake.value(), "adversarial_d_loss");
  Var<S> real_term = mean(softplus(scale(disc.logits(real), S(-1))));
  Var<S> fake_term = mean(softplus(disc.logits(fake)));
  return scale(add(real_term, fake_term), S(0.5));
}

template <typename S>
Var<S> mean_abs_diff(const Var<S>& a, const Var<S>& b) {
  return mean(abs(sub(a, b)));
}

/// Bicubic shrink by `factor` as a differentiable (unclamped) linear map.
template <typename S>
Var<S> bicubic_down(const Var<S>& img, int factor) {
  const Tensor<S>& t = img.value();
  if (t.height % factor != 0 || t.width % factor != 0) throw std::invalid_argument("bicubic_down: size not divisible by factor");
  return resize(img, t.height / factor, t.width / factor, Kernel::Bicubic);
}

/// Final-tap feature L1 + pixel L1 + L1 between bicubic-downsampled images,
/// each mean-reduced. `hr_final_tap` lets callers reuse cached features.
template <typename S>
Var<S> content_loss(const FeatureExtractor<S>& extractor, const Var<S>& sr, const Var<S>& hr, int factor,
                    bool feature_term = true, const Var<S>* hr_final_tap = nullptr) {
  require_same_shape(sr.value(), hr.value(), "content_loss");
  Var<S> pixel = add(mean_abs_diff(sr, hr), mean_abs_diff(bicubic_down(sr, factor), bicubic_down(hr, factor)));
  if (!feature_term) return pixel;
  const Var<S> target = hr_final_tap ? *hr_final_tap : extractor.final_tap(hr).values;
  return add(mean_abs_diff(extractor.final_tap(sr).values, target), pixel);
}

/// Per-channel mean and variance of each tap.
template <typename S>
struct TapStatistics {
  std::array<Var<S>, 4> mean;
  std::array<Var<S>, 4> var;
};

template <typename S>
TapStatistics<S> tap_statistics(const std::array<FeatureMap<S>, 4>& taps) {
  TapStatistics<S> s;
  for (int i = 0; i < 4; ++i) {
    s.mean[i] = channel_mean(taps[i].values);
    s.var[i] = channel_var(taps[i].values);
  }
  return s;
}

/// Σ over taps of mean_c |mean_c(sr) - mean_c(target)| + mean_c |var_c(sr) - var_c(target)|.
template <typename S>
Var<S> style_loss(const TapStatistics<S>& sr, const TapStatistics<S>& target) {
  std::vector<Var<S>> terms;
  for (int i = 0; i < 4; ++i) {
    terms.push_back(mean_abs_diff(sr.mean[i], target.mean[i]));
    terms.push_back(mean_abs_diff(sr.var[i], target.var[i]));
  }
  return weighted_sum(terms, std::vector<S>(terms.size(), S(1)));
}

template <typename S>
Var<S> style_loss(const FeatureExtractor<S>& extractor, const Var<S>& sr, const Var<S>& style_target) {
  return style_loss(tap_statistics(extractor.taps(sr)), tap_statistics(extractor.taps(style_target)));
}

template <typename S>
Var<S> tv_loss(const Var<S>& sr, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("tv_loss: beta must be positive");
  return total_variation(sr, static_cast<S>(beta));
}

/// Perceptual distance over the four taps.
///
/// With `linear` weights (one non-negative weight per channel per tap, as in
/// LPIPS) the distance is Σ_taps mean_pixels Σ_c w_c (n_a - n_b)², n being
/// channel-unit-normalised features. Without them, when the fallback is
/// allowed, every weight is 1 and the taps are averaged.
template <typename S>
struct PerceptualMetric {
  const FeatureExtractor<S>* extractor = nullptr;
  std::optional<std::array<Eigen::Matrix<S, 1, Eigen::Dynamic>, 4>> linear;
  bool allow_fallback = true;

  /// Loads LPIPS-style weights named "lpips.tap{1..4}" (shape 1×1×C).
  void load_linear(const ArrayContainer& weights) {
    std::array<Eigen::Matrix<S, 1, Eigen::Dynamic>, 4> w;
    for (int i = 0; i < 4; ++i) {
      const Tensor<S> t = from_named_array<S>(weights.array("lpips.tap" + std::to_string(i + 1)));
      if (t.pixels() != 1 || t.channels() != extractor->config().widths[i]) throw FormatError("lpips weight shape mismatch");
      w[i] = t.data.row(0);
    }
    linear = std::move(w);
  }

  Var<S> operator()(const std::array<FeatureMap<S>, 4>& a, const std::array<FeatureMap<S>, 4>& b) const {
    if (!linear && !allow_fallback) throw std::runtime_error("perceptual_loss: no LPIPS weights and fallback disabled");
    std::vector<Var<S>> terms;
    std::vector<S> weights;
    for (int i = 0; i < 4; ++i) {
      Var<S> diff = square(sub(unit_normalize(a[i].values), unit_normalize(b[i].values)));
      if (linear) {
        Tensor<S> w(diff.value().height, diff.value().width, MatrixX<S>((*linear)[i].replicate(diff.value().pixels(), 1)));
        diff = mul(diff, Var<S>::constant(std::move(w)));
      }
      terms.push_back(mean(diff));
      const S c = static_cast<S>(diff.value().channels());
      weights.push_back(linear ? c : c / S(4));
    }
    return weighted_sum(terms, weights);
  }

  Var<S> operator()(const Var<S>& a, const Var<S>& b) const {
    require_same_shape(a.value(), b.value(), "perceptual_loss");
    return (*this)(extractor->taps(a), extractor->taps(b));
  }
};

template <typename S>
Var<S> perceptual_loss(const PerceptualMetric<S>& metric, const Var<S>& sr, const Var<S>& hr) {
  return metric(sr, hr);
}

}  // namespace refvae
