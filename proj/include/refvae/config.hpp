#pragma once

#include "refvae/generator.hpp"
#include "refvae/imaging.hpp"
#include "refvae/losses.hpp"
#include "refvae/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace refvae {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class StyleTarget { Reference, Hr };

/// Everything that determines a training run.
///
/// Stored on disk as flat `key = value` lines ('#' starts a comment). The
/// optional `preset` key (desk | paper) selects the base values; every
/// other key overrides one field. See `TrainConfig::documented_keys`.
struct TrainConfig {
  std::string preset = "desk";
  AdamOptions adam;
  int batch = 4;
  int iterations = 2000;
  int scale = 8;
  int patch = 16;  ///< LR patch side; HR patch is patch * scale
  double noise_std = 0.0;
  LossWeights weights;
  StyleTarget style_target = StyleTarget::Hr;
  bool use_cvae = true;
  bool use_sc_loss = true;
  bool use_discriminator = true;
  bool lr_skip = true;
  std::uint64_t seed = 1;
  LatentConfig latent;
  int canonical_ref = 64;
  std::string extractor = "toy";  ///< toy | vgg19
  std::string extractor_weights;  ///< container path, required for vgg19
  std::uint64_t extractor_seed = 0x5eed;
  std::vector<int> decoder_widths;
  std::vector<int> disc_widths{8, 16, 32};
  int disc_strided = 2;
  int checkpoint_every = 0;  ///< 0: only the final checkpoint

  /// Desk-scale defaults: toy extractor, 64² references, 8×8×32 latent,
  /// 16² LR patches, batch 4, 2000 iterations.
  static TrainConfig desk();
  /// Full-scale values: 256² references, 8×8×128 latent, 32² LR patches,
  /// batch 16, 5×10⁴ iterations, VGG-19 extractor.
  static TrainConfig paper();

  int hr_patch() const { return patch * scale; }
  DegradationConfig degradation() const { return {scale, noise_std}; }
  ModelConfig model_config() const;

  void validate() const;

  /// Canonical text form: every key, sorted, shortest round-trip numbers.
  std::string to_text() const;
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);

  /// Applies one key; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  static const std::map<std::string, std::string>& documented_keys();

  bool operator==(const TrainConfig& o) const { return to_text() == o.to_text(); }
};

}  // namespace refvae
