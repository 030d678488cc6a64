#pragma once

#include "refvae/cvae.hpp"

#include <optional>
#include <string>
#include <vector>

namespace refvae {

/// Per-site modulation learned from LR features.
template <typename S>
struct FusionStats {
  Var<S> f_mu;
  Var<S> f_sigma;
};

/// LR-statistics head plus the image decoder.
///
/// Stats head: conv3×3 + leaky body, then two conv3×3 heads (f_mu, f_sigma)
/// at the feature width. Decoder: log2(upsample) stages of three conv3×3 +
/// leaky layers followed by bilinear 2× upsampling, then a conv3×3 to RGB and
/// a clamp to [0, 1]. LR features sit at 1/kExtractorStride of the upsampled
/// LR, so the model always decodes by kExtractorStride whatever the scale. With `residual` the RGB conv predicts an offset from the
/// bicubic-upsampled LR image instead of the image itself.
template <typename S>
class Generator {
 public:
  Generator() = default;

  Generator(int feature_channels, int upsample, const std::vector<int>& decoder_widths, RandomStream& rng,
            bool residual = false)
      : feature_channels_(feature_channels), upsample_(upsample), residual_(residual) {
    int stages = 0;
    while ((1 << stages) < upsample) ++stages;
    if ((1 << stages) != upsample) throw std::invalid_argument("Generator: upsample must be a power of two");
    if (static_cast<int>(decoder_widths.size()) != stages) {
      throw std::invalid_argument("Generator: need " + std::to_string(stages) + " decoder widths for upsample " +
                                  std::to_string(upsample));
    }
    const ConvSpec same{3, 1, 1, Padding::Reflect};
    stats_body_ = make_conv<S>(feature_channels, feature_channels, same, rng, true);
    mu_head_ = make_conv<S>(feature_channels, feature_channels, same, rng, true, 0.1);
    sigma_head_ = make_conv<S>(feature_channels, feature_channels, same, rng, true, 0.1);
    int cin = feature_channels;
    for (int width : decoder_widths) {
      std::vector<Conv<S>> stage;
      for (int i = 0; i < 3; ++i) {
        stage.push_back(make_conv<S>(cin, width, same, rng, true));
        cin = width;
      }
      stages_.push_back(std::move(stage));
    }
    to_rgb_ = make_conv<S>(cin, 3, same, rng, true, 0.5);
    to_rgb_.bias.mutable_value().data.setConstant(residual ? S(0) : S(0.5));
  }

  /// Widths (C, C/2, C/4, ...) for log2(upsample) stages.
  static std::vector<int> default_widths(int feature_channels, int upsample = kExtractorStride) {
    std::vector<int> w;
    for (int s = 1, c = feature_channels; s < upsample; s *= 2, c = std::max(1, c / 2)) w.push_back(c);
    return w;
  }

  int upsample() const { return upsample_; }
  int feature_channels() const { return feature_channels_; }
  bool residual() const { return residual_; }
  Conv<S>& mu_head() { return mu_head_; }
  Conv<S>& sigma_head() { return sigma_head_; }

  ParamList<S> parameters() const {
    ParamList<S> out;
    stats_body_.collect("generator.stats.body", out);
    mu_head_.collect("generator.stats.mu", out);
    sigma_head_.collect("generator.stats.sigma", out);
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      for (std::size_t i = 0; i < stages_[s].size(); ++i) {
        stages_[s][i].collect("generator.decoder.stage" + std::to_string(s + 1) + ".conv" + std::to_string(i + 1), out);
      }
    }
    to_rgb_.collect("generator.decoder.to_rgb", out);
    return out;
  }

  FusionStats<S> stats(const Var<S>& lr_features) const {
    if (lr_features.value().channels() != feature_channels_) {
      throw std::invalid_argument("compute_stats: expected " + std::to_string(feature_channels_) + " channels, got " +
                                  lr_features.value().shape_string());
    }
    Var<S> h = leaky_relu(stats_body_(lr_features), S(0.2));
    return {mu_head_(h), sigma_head_(h)};
  }

  /// `base` is the bicubic-upsampled LR image, required iff residual().
  Var<S> decode(const Var<S>& fused, const Var<S>* base = nullptr) const {
    if (fused.value().channels() != feature_channels_) throw std::invalid_argument("decode_image: channel mismatch");
    if (residual_ && !base) throw std::invalid_argument("decode_image: residual decoder needs the upsampled LR image");
    Var<S> x = fused;
    for (const auto& stage : stages_) {
      for (const auto& conv : stage) x = leaky_relu(conv(x), S(0.2));
      x = resize(x, 2 * x.value().height, 2 * x.value().width, Kernel::Bilinear);
    }
    x = to_rgb_(x);
    if (residual_) {
      require_same_shape(x.value(), base->value(), "decode_image");
      x = add(x, *base);
    }
    if (!x.value().all_finite()) throw std::domain_error("decode_image: non-finite activations");
    return clamp(x, S(0), S(1));
  }

 private:
  int feature_channels_ = 0;
  int upsample_ = kExtractorStride;
  bool residual_ = false;
  Conv<S> stats_body_;
  Conv<S> mu_head_;
  Conv<S> sigma_head_;
  std::vector<std::vector<Conv<S>>> stages_;
  Conv<S> to_rgb_;
};

template <typename S>
FusionStats<S> compute_stats(const Generator<S>& gen, const FeatureMap<S>& lr_features) {
  return gen.stats(lr_features.values);
}

/// F = C_R * (1 + f_sigma) + f_mu, elementwise.
template <typename S>
Var<S> fuse(const Var<S>& conditional, const FusionStats<S>& stats) {
  require_same_shape(conditional.value(), stats.f_mu.value(), "fuse");
  require_same_shape(conditional.value(), stats.f_sigma.value(), "fuse");
  return add(mul(conditional, add_scalar(stats.f_sigma, S(1))), stats.f_mu);
}

template <typename S>
Var<S> decode_image(const Generator<S>& gen, const Var<S>& fused, const Var<S>* base = nullptr) {
  return gen.decode(fused, base);
}

/// PatchGAN-style classifier: `strided` k4/s2 layers then k4/s1 layers over
/// the remaining widths, and a final k4/s1 conv to one logit per patch.
struct DiscriminatorConfig {
  std::vector<int> widths{8, 16, 32};
  int strided = 2;

  static DiscriminatorConfig full() { return {{64, 128, 256, 512}, 3}; }
};

template <typename S>
class Discriminator {
 public:
  Discriminator() = default;

  Discriminator(const DiscriminatorConfig& cfg, RandomStream& rng) {
    int cin = 3;
    for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
      const int stride = static_cast<int>(i) < cfg.strided ? 2 : 1;
      layers_.push_back(make_conv<S>(cin, cfg.widths[i], ConvSpec{4, stride, 1, Padding::Reflect}, rng, true));
      cin = cfg.widths[i];
    }
    layers_.push_back(make_conv<S>(cin, 1, ConvSpec{4, 1, 1, Padding::Reflect}, rng, true, 0.5));
  }

  /// Patch logits (h'×w'×1); D = sigmoid(logit).
  Var<S> logits(const Var<S>& image) const {
    Var<S> x = image;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i](x);
      if (i + 1 < layers_.size()) x = leaky_relu(x, S(0.2));
    }
    return x;
  }

  /// Side of the square input region seen by one output logit.
  int receptive_field() const {
    int rf = 1;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) rf = (rf - 1) * it->spec.stride + it->spec.kernel;
    return rf;
  }

  std::vector<Conv<S>>& layers() { return layers_; }

  ParamList<S> parameters() const {
    ParamList<S> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect("discriminator.conv" + std::to_string(i + 1), out);
    return out;
  }

 private:
  std::vector<Conv<S>> layers_;
};

struct ModelConfig {
  ExtractorConfig extractor = ExtractorConfig::toy();
  LatentConfig latent;
  int scale = 8;
  std::vector<int> decoder_widths;  ///< empty: Generator::default_widths
  DiscriminatorConfig discriminator;
  bool use_cvae = true;
  bool lr_skip = false;  ///< residual decoder over the bicubic-upsampled LR
  std::uint64_t init_seed = 1;
};

enum class InferenceMode { Reference, Random, LrAsRef, HrAsRef };

std::string to_string(InferenceMode mode);
InferenceMode parse_mode(const std::string& name);

/// Everything needed to super-resolve: frozen extractor and trainable parts.
template <typename S>
struct Model {
  ModelConfig config;
  FeatureExtractor<S> extractor;
  Cvae<S> cvae;
  Generator<S> generator;
  Discriminator<S> discriminator;

  Model() = default;

  explicit Model(const ModelConfig& cfg) : Model(cfg, FeatureExtractor<S>(cfg.extractor)) {}

  Model(const ModelConfig& cfg, FeatureExtractor<S> fx) : config(cfg), extractor(std::move(fx)) {
    RandomStream rng({cfg.init_seed, 0x1417});
    const int c = extractor.channels();
    cvae = Cvae<S>(c, cfg.extractor.canonical_size / 8, cfg.latent, rng);
    const auto widths = cfg.decoder_widths.empty() ? Generator<S>::default_widths(c) : cfg.decoder_widths;
    generator = Generator<S>(c, kExtractorStride, widths, rng, cfg.lr_skip);
    discriminator = Discriminator<S>(cfg.discriminator, rng);
  }

  /// Parameters updated by the generator step (cvae + generator).
  ParamList<S> generator_parameters() const {
    ParamList<S> out = cvae.parameters();
    for (auto& p : generator.parameters()) out.push_back(p);
    return out;
  }
};

/// Differentiable pieces of one forward pass, kept for loss computation.
template <typename S>
struct ForwardResult {
  Var<S> sr;
  std::optional<LatentDistribution<S>> posterior;
  Var<S> conditional;
};

/// LR input as seen by the model: the bicubic-upsampled image and its
/// final-tap features.
template <typename S>
struct LrInput {
  Var<S> upsampled;
  FeatureMap<S> features;
};

template <typename S>
LrInput<S> prepare_lr(const FeatureExtractor<S>& extractor, const Image& lr, int scale) {
  if (scale < 1) throw std::invalid_argument("prepare_lr: scale must be >= 1");
  if ((lr.height() * scale) % kExtractorStride != 0 || (lr.width() * scale) % kExtractorStride != 0) {
    throw std::invalid_argument("prepare_lr: LR size times scale must be divisible by " + std::to_string(kExtractorStride));
  }
  Var<S> up = image_var<S>(scale == 1 ? lr : bicubic_resize(lr, lr.height() * scale, lr.width() * scale));
  FeatureMap<S> f = extractor.final_tap(up);
  return {std::move(up), std::move(f)};
}

/// Conditional features for the LR feature grid. With the cvae disabled the
/// carrier is zero, leaving only the LR statistics path.
template <typename S>
ForwardResult<S> forward(const Model<S>& model, const LrInput<S>& lr, const FeatureMap<S>* ref_features,
                         RandomStream& rng) {
  const FeatureMap<S>& lr_features = lr.features;
  const int h = lr_features.height(), w = lr_features.width();
  ForwardResult<S> r;
  if (!model.config.use_cvae) {
    r.conditional = Var<S>::constant(Tensor<S>(h, w, lr_features.channels()));
  } else if (ref_features) {
    r.posterior = feature_encode(model.cvae, *ref_features);
    r.conditional = feature_decode(model.cvae, sample_latent(*r.posterior, rng), h, w);
  } else {
    const LatentConfig& lat = model.cvae.latent();
    r.conditional = feature_decode(model.cvae, sample_prior<S>(lat, lat, rng), h, w);
  }
  r.sr = decode_image(model.generator, fuse(r.conditional, compute_stats(model.generator, lr_features)), &lr.upsampled);
  return r;
}

/// Full inference chain. `guide` is the reference image in Reference mode
/// and the ground-truth HR image in HrAsRef mode; it is ignored otherwise.
template <typename S>
Image super_resolve(const Model<S>& model, const Image& lr, InferenceMode mode, RandomStream& rng,
                    const Image* guide = nullptr) {
  if (lr.height() < 4 || lr.width() < 4) throw std::invalid_argument("super_resolve: LR image must be at least 4x4");
  const LrInput<S> lr_input = prepare_lr(model.extractor, lr, model.config.scale);
  std::optional<FeatureMap<S>> ref;
  switch (mode) {
    case InferenceMode::Reference:
    case InferenceMode::HrAsRef:
      if (!guide) throw std::invalid_argument("super_resolve: mode '" + to_string(mode) + "' requires a reference image");
      ref = encode_reference(model.extractor, *guide);
      break;
    case InferenceMode::LrAsRef:
      ref = encode_reference(model.extractor, lr);
      break;
    case InferenceMode::Random:
      break;
  }
  const ForwardResult<S> r = forward(model, lr_input, ref ? &*ref : nullptr, rng);
  return Image::from_tensor(r.sr.value());
}

}  // namespace refvae
