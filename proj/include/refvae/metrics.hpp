#pragma once

#include "refvae/imaging.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace refvae {

/// Reported in place of +inf for identical images.
inline constexpr double kPsnrCap = 100.0;

struct MetricOptions {
  bool y_only = true;
  int border = 0;  ///< pixels cropped from every side before comparing
};

/// PSNR in dB on 8-bit-quantised values (Y channel, or all RGB channels).
double psnr(const Image& a, const Image& b, const MetricOptions& opt = {});
inline double psnr(const Image& a, const Image& b, bool y_only) { return psnr(a, b, MetricOptions{y_only, 0}); }

/// Gaussian-window SSIM (11×11, sigma 1.5, k1 0.01, k2 0.03, L 255) averaged
/// over all fully-contained windows. Needs min dimension >= 11.
double ssim(const Image& a, const Image& b, const MetricOptions& opt = {});
inline double ssim(const Image& a, const Image& b, bool y_only) { return ssim(a, b, MetricOptions{y_only, 0}); }

/// Dense per-pixel score map between a sample and the ground truth; lower is
/// better.
using DenseMetric = std::function<Eigen::MatrixXd(const Image& sample, const Image& gt)>;

/// Mean absolute RGB error per pixel.
Eigen::MatrixXd abs_error_map(const Image& sample, const Image& gt);

/// (global best - local best) / global best × 100, where local best is the
/// image mean of the pixelwise best over samples and global best the best
/// whole-image mean. Defined as 0 when the global best is 0.
double diverse_score(const std::vector<Image>& samples, const Image& gt, const DenseMetric& metric = abs_error_map);

struct LrConsistency {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Shrinks `sr` by `scale` with bicubic and compares it with `lr`.
LrConsistency lr_consistency(const Image& sr, const Image& lr, int scale, const MetricOptions& opt = {});

struct MetricRecord {
  std::string image;
  std::string mode;
  double psnr = 0.0;
  double ssim = 0.0;
  double perceptual = 0.0;
  double lr_psnr = 0.0;
  double lr_ssim = 0.0;
  std::optional<double> diverse_score;

  bool operator==(const MetricRecord&) const = default;
};

struct MetricAggregate {
  std::string mode;
  int count = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double perceptual = 0.0;
  double lr_psnr = 0.0;
  double lr_ssim = 0.0;
  std::optional<double> diverse_score;

  bool operator==(const MetricAggregate&) const = default;
};

/// Per-image records plus per-mode means.
struct MetricsReport {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string dataset;
  std::vector<std::string> modes;
  std::uint64_t seed = 0;
  int n_samples = 0;
  std::vector<MetricRecord> records;
  std::vector<MetricAggregate> aggregates;
  std::vector<std::string> notes;

  /// Rebuilds `aggregates` as per-mode means of `records`, in first-seen
  /// mode order.
  void recompute_aggregates();

  const MetricAggregate* aggregate(const std::string& mode) const;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static MetricsReport load(const std::filesystem::path& path);

  /// One row per aggregate: mode,count,psnr,ssim,perceptual,div,lr_psnr,lr_ssim.
  std::string to_csv() const;

  bool operator==(const MetricsReport&) const = default;
};

}  // namespace refvae
