#pragma once

#include "refvae/random.hpp"
#include "refvae/tensor.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace refvae {

/// H×W RGB raster with values in [0, 1].
///
/// Pixels are stored as an (H*W) × 3 matrix, one contiguous plane per
/// channel, the same layout as Tensor, so conversion is a cast.
class Image {
 public:
  using Pixels = Eigen::Matrix<double, Eigen::Dynamic, 3>;

  Image() = default;
  Image(int height, int width);

  /// Takes ownership of `pixels`; throws if any value is outside [0, 1] or
  /// non-finite.
  Image(int height, int width, Pixels pixels);

  /// Like the validating constructor but clamps into [0, 1] first.
  static Image clamped(int height, int width, Pixels pixels);
  static Image constant(int height, int width, double value);

  template <typename S>
  static Image from_tensor(const Tensor<S>& t) {
    if (t.channels() != 3) throw std::invalid_argument("Image::from_tensor: expected 3 channels, got " + t.shape_string());
    return clamped(t.height, t.width, t.data.template cast<double>());
  }

  template <typename S>
  Tensor<S> to_tensor() const {
    return Tensor<S>(height_, width_, MatrixX<S>(pixels_.cast<S>()));
  }

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return height_ == 0; }
  const Pixels& pixels() const { return pixels_; }

  double at(int y, int x, int c) const { return pixels_(static_cast<Eigen::Index>(y) * width_ + x, c); }

  /// Writes are clamped to keep the [0, 1] invariant.
  void set(int y, int x, int c, double v);

  Eigen::Map<const RowMajorX<double>> plane(int c) const { return {pixels_.col(c).data(), height_, width_}; }

  Image crop(int y0, int x0, int h, int w) const;

  bool operator==(const Image& o) const {
    return height_ == o.height_ && width_ == o.width_ && pixels_ == o.pixels_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  Pixels pixels_;
};

/// BT.601 studio-swing conversion; plane 0 holds Y in [16/255, 235/255].
Image rgb_to_ycbcr(const Image& img);
Image ycbcr_to_rgb(const Image& img);

/// Y plane of `rgb_to_ycbcr`, on the 0..255 scale.
Eigen::MatrixXd luma_255(const Image& img);

/// Separable bicubic (a = -0.5) resize, antialiased when shrinking; output
/// clamped to [0, 1].
Image bicubic_resize(const Image& img, int out_h, int out_w);

/// Downsampling model: bicubic shrink by `scale` followed by optional
/// additive white Gaussian noise.
struct DegradationConfig {
  int scale = 8;
  double noise_std = 0.0;

  void validate() const;
};

/// Shrinks `hr` by `cfg.scale`, adds N(0, noise_std²) noise, clamps.
/// Dimensions must be divisible by the scale.
Image degrade(const Image& hr, const DegradationConfig& cfg, RandomStream& rng);

struct PatchPair {
  Image lr;
  Image hr;
  int y = 0;
  int x = 0;
};

/// Tiles `hr` with `patch`-sized squares on a `stride` grid and degrades each
/// tile, consuming `rng` in row-major tile order. Empty when the image is
/// smaller than one patch.
std::vector<PatchPair> extract_patch_pairs(const Image& hr, const DegradationConfig& cfg, int patch, int stride,
                                           RandomStream& rng);

/// 8-bit RGB PNG I/O. Gray and alpha inputs are expanded/stripped.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

/// Line-delimited list of image paths; blank lines and '#' comments are
/// skipped, relative entries resolve against the manifest's directory.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);

}  // namespace refvae
