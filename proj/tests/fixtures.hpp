#pragma once

#include "refvae/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

namespace fixtures {

using refvae::Image;

/// Procedural 128-ish test image: smooth colour ramps, oriented stripes and a
/// disc, varied by `index`.
inline Image desk_image(int index, int h = 128, int w = 128) {
  Image img(h, w);
  const double pi = std::numbers::pi;
  const double angle = 0.35 + 0.7 * index;
  const double freq = 2.0 * pi / (10.0 + 3.0 * index);
  const double cy = h * (0.3 + 0.1 * index), cx = w * (0.65 - 0.1 * index), radius = 0.18 * h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / (w - 1), v = static_cast<double>(y) / (h - 1);
      const double stripe = 0.5 + 0.5 * std::sin(freq * (x * std::cos(angle) + y * std::sin(angle)));
      const bool disc = (y - cy) * (y - cy) + (x - cx) * (x - cx) < radius * radius;
      double r = 0.2 + 0.5 * u + 0.2 * stripe;
      double g = 0.3 + 0.4 * v * (index % 2 ? 1.0 : -0.5) + 0.15 * stripe;
      double b = 0.6 - 0.3 * u * v + 0.1 * stripe * (index + 1) / 4.0;
      if (disc) {
        r = 0.85 - 0.1 * index;
        g = 0.25 + 0.15 * index;
        b = 0.35;
      }
      img.set(y, x, 0, r);
      img.set(y, x, 1, g);
      img.set(y, x, 2, b);
    }
  }
  return img;
}

/// Writes `count` desk images plus a manifest listing them into `dir`.
inline std::filesystem::path write_corpus(const std::filesystem::path& dir, int count = 4, int size = 128) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  for (int i = 0; i < count; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    refvae::write_png(dir / name, desk_image(i, size, size));
    manifest << name << "\n";
  }
  return dir / "manifest.txt";
}

/// Tiny model for double-precision gradient checks: 4×4 LR at ×8, a 4×4
/// latent grid and narrow layers.
inline refvae::ModelConfig toy_model_config(bool lr_skip = false) {
  refvae::ModelConfig m;
  m.extractor.widths = {4, 6, 8, 8};
  m.extractor.canonical_size = 32;
  m.latent = {4, 4, 4};
  m.scale = 8;
  m.decoder_widths = {8, 4, 4};
  m.discriminator = {{4, 6}, 2};
  m.lr_skip = lr_skip;
  m.init_seed = 7;
  return m;
}

/// Random image tensor with values in [lo, hi].
inline refvae::Tensor<double> random_image(int h, int w, refvae::RandomStream& rng, double lo = 0.2, double hi = 0.8) {
  refvae::Tensor<double> t(h, w, 3);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = lo + (hi - lo) * rng.uniform();
  return t;
}

inline refvae::Tensor<double> random_normal(int h, int w, int c, refvae::RandomStream& rng, double sd = 1.0) {
  refvae::Tensor<double> t(h, w, c);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = sd * rng.normal();
  return t;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("refvae_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
