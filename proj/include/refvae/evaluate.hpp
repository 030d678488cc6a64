#pragma once

#include "refvae/generator.hpp"
#include "refvae/losses.hpp"
#include "refvae/metrics.hpp"

#include <filesystem>
#include <iostream>
#include <vector>

namespace refvae {

struct EvaluationOptions {
  std::vector<InferenceMode> modes{InferenceMode::Reference, InferenceMode::Random, InferenceMode::LrAsRef,
                                   InferenceMode::HrAsRef};
  std::uint64_t seed = 1;
  int n_samples = 10;  ///< random-mode draws per image for the diverse score
  /// Reference images for Reference mode, used round-robin. When empty the
  /// next manifest image serves as the reference.
  std::vector<std::filesystem::path> references;
  DegradationConfig degradation;
  MetricOptions metric;
  DenseMetric diverse_metric = abs_error_map;
};

/// Degrades every manifest image, super-resolves it in each requested mode
/// and scores the result. Unreadable images are skipped with a note.
template <typename S>
MetricsReport evaluate_dataset(const Model<S>& model, const std::vector<std::filesystem::path>& manifest,
                               const EvaluationOptions& opt) {
  if (manifest.empty()) throw std::invalid_argument("evaluate_dataset: manifest is empty");
  if (opt.n_samples < 1) throw std::invalid_argument("evaluate_dataset: n_samples must be >= 1");
  const int scale = model.config.scale;
  MetricsReport report;
  report.seed = opt.seed;
  report.n_samples = opt.n_samples;
  for (auto m : opt.modes) report.modes.push_back(to_string(m));

  std::vector<Image> images(manifest.size());
  std::vector<bool> ok(manifest.size(), false);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    try {
      Image img = read_png(manifest[i]);
      const int unit = std::max(scale, kExtractorStride);
      const int h = img.height() / unit * unit, w = img.width() / unit * unit;
      if (h < 4 * scale || w < 4 * scale) throw std::runtime_error("image too small for scale " + std::to_string(scale));
      images[i] = (h == img.height() && w == img.width()) ? std::move(img) : img.crop(0, 0, h, w);
      ok[i] = true;
    } catch (const std::exception& e) {
      const std::string note = "skipped " + manifest[i].string() + ": " + e.what();
      std::cerr << "warning: " << note << "\n";
      report.notes.push_back(note);
    }
  }
  std::vector<Image> refs;
  for (const auto& p : opt.references) refs.push_back(read_png(p));
  if (opt.n_samples < 2) report.notes.push_back("diverse score omitted: requires at least 2 samples per image");

  PerceptualMetric<S> perceptual{&model.extractor, std::nullopt, true};
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!ok[i]) continue;
    const Image& hr = images[i];
    RandomStream degrade_rng({opt.seed, i, 0xde9});
    const Image lr = degrade(hr, opt.degradation, degrade_rng);
    for (std::size_t m = 0; m < opt.modes.size(); ++m) {
      const InferenceMode mode = opt.modes[m];
      const Image* guide = nullptr;
      if (mode == InferenceMode::HrAsRef) guide = &hr;
      if (mode == InferenceMode::Reference) {
        if (!refs.empty()) {
          guide = &refs[i % refs.size()];
        } else {
          std::size_t j = (i + 1) % manifest.size();
          while (!ok[j]) j = (j + 1) % manifest.size();
          guide = &images[j];
        }
      }
      RandomStream rng({opt.seed, i, m, 0});
      const Image sr = super_resolve(model, lr, mode, rng, guide);
      MetricRecord rec;
      rec.image = manifest[i].filename().string();
      rec.mode = to_string(mode);
      rec.psnr = psnr(sr, hr, opt.metric);
      rec.ssim = ssim(sr, hr, opt.metric);
      rec.perceptual = static_cast<double>(perceptual(image_var<S>(sr), image_var<S>(hr)).item());
      const LrConsistency lc = lr_consistency(sr, lr, scale, opt.metric);
      rec.lr_psnr = lc.psnr;
      rec.lr_ssim = lc.ssim;
      if (mode == InferenceMode::Random && opt.n_samples >= 2) {
        std::vector<Image> samples{sr};
        for (int k = 1; k < opt.n_samples; ++k) {
          RandomStream sample_rng({opt.seed, i, m, static_cast<std::uint64_t>(k)});
          samples.push_back(super_resolve(model, lr, mode, sample_rng, guide));
        }
        rec.diverse_score = diverse_score(samples, hr, opt.diverse_metric);
      }
      report.records.push_back(std::move(rec));
    }
  }
  report.recompute_aggregates();
  return report;
}

}  // namespace refvae
