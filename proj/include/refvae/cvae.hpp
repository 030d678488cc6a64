#pragma once

#include "refvae/features.hpp"

#include <cmath>
#include <string>

namespace refvae {

/// Spatial latent grid shape.
struct LatentConfig {
  int height = 8;
  int width = 8;
  int channels = 32;

  bool operator==(const LatentConfig&) const = default;
};

/// Diagonal Gaussian over the latent grid, parameterised by mean and
/// log-variance.
template <typename S>
struct LatentDistribution {
  Var<S> mu;
  Var<S> log_var;

  Tensor<S> sigma() const {
    const Tensor<S>& lv = log_var.value();
    return Tensor<S>(lv.height, lv.width, MatrixX<S>((lv.data.array() * S(0.5)).exp().matrix()));
  }
};

enum class LatentSource { Posterior, Prior };

template <typename S>
struct LatentSample {
  Var<S> z;
  LatentSource source = LatentSource::Posterior;
};

/// Feature encoder (reference features → latent Gaussian) and feature
/// decoder (latent sample → conditional features).
///
/// Encoder: conv3×3 + leaky, stride-2 conv3×3 + leaky while the grid is at
/// least twice the latent size, bilinear to the exact latent size if still
/// different, then two conv3×3 heads for mu and log-variance. Decoder: one
/// conv3×3 + leaky block to the feature width.
template <typename S>
class Cvae {
 public:
  Cvae() = default;

  /// `ref_grid` is the spatial size of reference features (canonical/8).
  Cvae(int feature_channels, int ref_grid, const LatentConfig& latent, RandomStream& rng)
      : latent_(latent), feature_channels_(feature_channels), ref_grid_(ref_grid) {
    const ConvSpec same{3, 1, 1, Padding::Reflect};
    const ConvSpec down{3, 2, 1, Padding::Reflect};
    encoder_in_ = make_conv<S>(feature_channels, feature_channels, same, rng, true);
    for (int g = ref_grid; g >= 2 * latent.height && g >= 2 * latent.width; g /= 2) {
      encoder_down_.push_back(make_conv<S>(feature_channels, feature_channels, down, rng, true));
    }
    mu_head_ = make_conv<S>(feature_channels, latent.channels, same, rng, true, 0.1);
    log_var_head_ = make_conv<S>(feature_channels, latent.channels, same, rng, true);
    zero_conv(log_var_head_);
    decoder_ = make_conv<S>(latent.channels, feature_channels, same, rng, true);
  }

  const LatentConfig& latent() const { return latent_; }
  int feature_channels() const { return feature_channels_; }
  int reference_grid() const { return ref_grid_; }

  Conv<S>& mu_head() { return mu_head_; }
  Conv<S>& log_var_head() { return log_var_head_; }
  Conv<S>& decoder() { return decoder_; }

  ParamList<S> parameters() const {
    ParamList<S> out;
    encoder_in_.collect("cvae.encoder.in", out);
    for (std::size_t i = 0; i < encoder_down_.size(); ++i) encoder_down_[i].collect("cvae.encoder.down" + std::to_string(i + 1), out);
    mu_head_.collect("cvae.encoder.mu", out);
    log_var_head_.collect("cvae.encoder.log_var", out);
    decoder_.collect("cvae.decoder", out);
    return out;
  }

  LatentDistribution<S> encode(const Var<S>& ref_features) const {
    const Tensor<S>& f = ref_features.value();
    if (f.height != ref_grid_ || f.width != ref_grid_ || f.channels() != feature_channels_) {
      throw std::invalid_argument("feature_encode: expected " + std::to_string(ref_grid_) + "x" + std::to_string(ref_grid_) +
                                  "x" + std::to_string(feature_channels_) + " reference features, got " + f.shape_string());
    }
    constexpr S slope = S(0.2);
    Var<S> x = leaky_relu(encoder_in_(ref_features), slope);
    for (const auto& conv : encoder_down_) x = leaky_relu(conv(x), slope);
    x = resize(x, latent_.height, latent_.width, Kernel::Bilinear);
    return {mu_head_(x), log_var_head_(x)};
  }

  Var<S> decode(const Var<S>& z, int target_h, int target_w) const {
    if (target_h < 1 || target_w < 1) throw std::invalid_argument("feature_decode: target size must be positive");
    check_latent_shape(z.value());
    Var<S> c = leaky_relu(decoder_(z), S(0.2));
    return resize(c, target_h, target_w, Kernel::Bilinear);
  }

  void check_latent_shape(const Tensor<S>& z) const {
    if (z.height != latent_.height || z.width != latent_.width || z.channels() != latent_.channels) {
      throw std::invalid_argument("latent shape " + z.shape_string() + " does not match configured " +
                                  std::to_string(latent_.height) + "x" + std::to_string(latent_.width) + "x" +
                                  std::to_string(latent_.channels));
    }
  }

 private:
  LatentConfig latent_;
  int feature_channels_ = 0;
  int ref_grid_ = 0;
  Conv<S> encoder_in_;
  std::vector<Conv<S>> encoder_down_;
  Conv<S> mu_head_;
  Conv<S> log_var_head_;
  Conv<S> decoder_;
};

template <typename S>
LatentDistribution<S> feature_encode(const Cvae<S>& cvae, const FeatureMap<S>& ref_features) {
  return cvae.encode(ref_features.values);
}

/// Reparameterised draw z = mu + eps * exp(log_var / 2), eps ~ N(0, I).
template <typename S>
LatentSample<S> sample_latent(const LatentDistribution<S>& dist, RandomStream& rng) {
  const Tensor<S>& mu = dist.mu.value();
  Tensor<S> eps(mu.height, mu.width, mu.channels());
  for (Eigen::Index i = 0; i < eps.data.size(); ++i) eps.data.data()[i] = static_cast<S>(rng.normal());
  Var<S> sigma = exp(scale(dist.log_var, S(0.5)));
  return {add(dist.mu, mul(Var<S>::constant(std::move(eps)), sigma)), LatentSource::Posterior};
}

/// Standard-normal draw on the latent grid.
template <typename S>
LatentSample<S> sample_prior(const LatentConfig& shape, const LatentConfig& configured, RandomStream& rng) {
  if (!(shape == configured)) throw std::invalid_argument("sample_prior: shape does not match configured latent grid");
  Tensor<S> z(shape.height, shape.width, shape.channels);
  for (Eigen::Index i = 0; i < z.data.size(); ++i) z.data.data()[i] = static_cast<S>(rng.normal());
  return {Var<S>::constant(std::move(z)), LatentSource::Prior};
}

/// KL(N(mu, sigma²) || N(0, I)) = ½ Σ(−(log σ² + 1) + σ² + mu²), divided by
/// the number of latent entries.
template <typename S>
Var<S> kl_divergence(const LatentDistribution<S>& dist) {
  if (!dist.mu.value().all_finite() || !dist.log_var.value().all_finite()) {
    throw std::domain_error("kl_divergence: non-finite distribution parameters");
  }
  Var<S> per_entry = add(sub(exp(dist.log_var), add_scalar(dist.log_var, S(1))), square(dist.mu));
  return scale(mean(per_entry), S(0.5));
}

template <typename S>
Var<S> feature_decode(const Cvae<S>& cvae, const LatentSample<S>& z, int target_h, int target_w) {
  return cvae.decode(z.z, target_h, target_w);
}

}  // namespace refvae
