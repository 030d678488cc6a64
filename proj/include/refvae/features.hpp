#pragma once

#include "refvae/container.hpp"
#include "refvae/imaging.hpp"
#include "refvae/layers.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace refvae {

inline constexpr std::array<const char*, 4> kTapNames = {"tap1", "tap2", "tap3", "tap4"};

/// Downsampling from the input image to the final tap (three 2×2 pools).
inline constexpr int kExtractorStride = 8;

/// Architecture of the perceptual extractor: four conv blocks with a tap
/// after each and 2×2 max pooling after the first three, so the last tap
/// sits at 1/8 of the input resolution.
struct ExtractorConfig {
  std::array<int, 4> widths{8, 16, 32, 64};
  std::array<int, 4> convs_per_block{1, 1, 1, 1};
  double slope = 0.2;  ///< leaky slope; 0 gives plain ReLU
  Padding padding = Padding::Reflect;
  std::array<double, 3> input_mean{0.5, 0.5, 0.5};
  std::array<double, 3> input_std{0.5, 0.5, 0.5};
  int canonical_size = 64;  ///< references are resized to this square
  std::uint64_t seed = 0x5eed;

  int channels() const { return widths[3]; }

  /// Bundled desk-scale extractor.
  static ExtractorConfig toy() { return {}; }

  /// VGG-19 layout up to relu4_1 (taps relu1_2, relu2_2, relu3_4, relu4_1).
  /// Weights must come from a container, see `FeatureExtractor::from_container`.
  static ExtractorConfig vgg19() {
    ExtractorConfig c;
    c.widths = {64, 128, 256, 512};
    c.convs_per_block = {2, 2, 4, 1};
    c.slope = 0.0;
    c.padding = Padding::Zero;
    c.input_mean = {0.485, 0.456, 0.406};
    c.input_std = {0.229, 0.224, 0.225};
    c.canonical_size = 256;
    return c;
  }
};

template <typename S>
struct FeatureMap {
  Var<S> values;
  std::string tap;

  int height() const { return values.value().height; }
  int width() const { return values.value().width; }
  int channels() const { return values.value().channels(); }
};

/// Frozen convolutional feature extractor. Its parameters are constants on
/// the tape: gradients flow through it to the input image but never into it.
template <typename S>
class FeatureExtractor {
 public:
  /// Randomly initialised from `cfg.seed`.
  explicit FeatureExtractor(const ExtractorConfig& cfg = ExtractorConfig::toy()) : cfg_(cfg) {
    RandomStream rng({cfg.seed, 0xfea7});
    int cin = 3;
    for (int b = 0; b < 4; ++b) {
      for (int i = 0; i < cfg.convs_per_block[b]; ++i) {
        ConvSpec spec{3, 1, 1, cfg.padding};
        blocks_[b].push_back(make_conv<S>(cin, cfg.widths[b], spec, rng, false));
        cin = cfg.widths[b];
      }
    }
  }

  /// Loads pretrained weights. Array names are
  /// "extractor.block{b}.conv{i}.weight|bias" with weight layout
  /// (cin*3*3) × 1 × cout, row index ci*9 + ky*3 + kx.
  static FeatureExtractor from_container(const ExtractorConfig& cfg, const ArrayContainer& weights) {
    FeatureExtractor fx(cfg);
    ParamList<S> params = fx.parameters();
    load_params(params, weights);
    return fx;
  }

  const ExtractorConfig& config() const { return cfg_; }
  int channels() const { return cfg_.channels(); }

  ParamList<S> parameters() const {
    ParamList<S> out;
    for (int b = 0; b < 4; ++b) {
      for (std::size_t i = 0; i < blocks_[b].size(); ++i) {
        blocks_[b][i].collect("extractor.block" + std::to_string(b + 1) + ".conv" + std::to_string(i + 1), out);
      }
    }
    return out;
  }

  std::uint64_t hash() const { return hash_params(parameters()); }

  /// All four taps from one forward pass.
  std::array<FeatureMap<S>, 4> taps(const Var<S>& image) const {
    if (image.value().channels() != 3) throw std::invalid_argument("extractor expects a 3-channel image");
    Var<S> x = normalize_input(image);
    std::array<FeatureMap<S>, 4> out;
    for (int b = 0; b < 4; ++b) {
      if (b > 0) x = max_pool2(x);
      for (const auto& conv : blocks_[b]) x = leaky_relu(conv(x), static_cast<S>(cfg_.slope));
      out[b] = {x, kTapNames[b]};
    }
    return out;
  }

  FeatureMap<S> final_tap(const Var<S>& image) const { return taps(image)[3]; }

 private:
  Var<S> normalize_input(const Var<S>& image) const {
    Tensor<S> shift(1, 1, 3), gain(1, 1, 3);
    for (int c = 0; c < 3; ++c) {
      shift.data(0, c) = static_cast<S>(-cfg_.input_mean[c] / cfg_.input_std[c]);
      gain.data(0, c) = static_cast<S>(1.0 / cfg_.input_std[c]);
    }
    // A 1×1 conv with diagonal weight applies the per-channel affine map.
    Tensor<S> w(3, 1, 3);
    for (int c = 0; c < 3; ++c) w.data(c, c) = gain.data(0, c);
    return conv2d(image, Var<S>::constant(std::move(w)), Var<S>::constant(std::move(shift)), ConvSpec{1, 1, 0, Padding::Zero});
  }

  ExtractorConfig cfg_;
  std::array<std::vector<Conv<S>>, 4> blocks_;
};

template <typename S>
Var<S> image_var(const Image& img) {
  return Var<S>::constant(img.to_tensor<S>());
}

/// Reference features on the fixed canonical grid (canonical/8 square),
/// independent of the reference's own resolution.
template <typename S>
FeatureMap<S> encode_reference(const FeatureExtractor<S>& extractor, const Image& ref) {
  const int n = extractor.config().canonical_size;
  const Image resized = (ref.height() == n && ref.width() == n) ? ref : bicubic_resize(ref, n, n);
  return extractor.final_tap(image_var<S>(resized));
}

/// LR features: bicubic upsampling by `scale`, then the final tap.
template <typename S>
FeatureMap<S> encode_lr(const FeatureExtractor<S>& extractor, const Image& lr, int scale) {
  if (scale < 1) throw std::invalid_argument("encode_lr: scale must be >= 1");
  const Image up = scale == 1 ? lr : bicubic_resize(lr, lr.height() * scale, lr.width() * scale);
  return extractor.final_tap(image_var<S>(up));
}

template <typename S>
std::array<FeatureMap<S>, 4> taps(const FeatureExtractor<S>& extractor, const Image& img) {
  return extractor.taps(image_var<S>(img));
}

}  // namespace refvae
