#pragma once

#include "refvae/config.hpp"
#include "refvae/container.hpp"
#include "refvae/evaluate.hpp"
#include "refvae/optim.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace refvae {

/// Scalar type used for training and inference; gradient checks use double.
using Real = float;

/// Non-finite loss during training.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kLossCsvHeader = "iter,content,style,lpips,tv,kl,adv_g,adv_d,total";
inline constexpr const char* kCheckpointFormat = "refvae-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Batch-mean losses of one iteration (1-based `iter`).
struct LossRecord {
  long iter = 0;
  LossParts parts;
  double adv_d = 0.0;
  double total = 0.0;

  std::string csv_row() const;
};

/// Training and reference images held in memory.
struct TrainData {
  std::filesystem::path train_manifest;
  std::filesystem::path ref_manifest;
  std::vector<Image> train;
  std::vector<Image> refs;

  static TrainData load(const std::filesystem::path& train_manifest, const std::filesystem::path& ref_manifest);
};

/// Alternating generator / discriminator optimisation on one thread.
///
/// Iteration i draws its reference, patches, noise and latent samples from
/// RandomStream(seed, i), so a run split across checkpoints replays the same
/// trajectory as an uninterrupted one.
class Trainer {
 public:
  Trainer(TrainConfig cfg, TrainData data);

  /// Restores parameters, optimiser moments and the iteration counter.
  static Trainer from_checkpoint(const ArrayContainer& ckpt, TrainData data);

  LossRecord step();

  const TrainConfig& config() const { return cfg_; }
  const Model<Real>& model() const { return model_; }
  long iteration() const { return iteration_; }

  ArrayContainer checkpoint() const;

 private:
  struct RefEntry {
    FeatureMap<Real> final_tap;
    TapStatistics<Real> stats;
  };
  struct HrEntry {
    Var<Real> hr;
    std::array<FeatureMap<Real>, 4> taps;
    TapStatistics<Real> stats;
    LrInput<Real> lr;
  };

  const RefEntry& reference(int index);
  HrEntry sample_patch(RandomStream& rng);
  HrEntry make_entry(const Image& hr, const Image& lr) const;

  TrainConfig cfg_;
  TrainData data_;
  Model<Real> model_;
  Adam<Real> gen_opt_;
  Adam<Real> disc_opt_;
  PerceptualMetric<Real> perceptual_;
  long iteration_ = 0;
  std::map<int, RefEntry> ref_cache_;
  std::map<int, HrEntry> hr_cache_;
};

/// Frozen extractor described by `cfg` (toy, or loaded from its weight file).
FeatureExtractor<Real> make_extractor(const TrainConfig& cfg);

/// Rebuilds the model stored in a checkpoint, verifying format version and
/// the extractor hash.
Model<Real> load_model(const ArrayContainer& ckpt);
TrainConfig checkpoint_config(const ArrayContainer& ckpt);

/// Fresh training run. Writes `out_dir/loss.csv` (truncated) and
/// `out_dir/checkpoint.bin`, plus `checkpoint_<iter>.bin` at the configured
/// cadence. Throws NumericError naming the term and iteration on a
/// non-finite loss.
ArrayContainer train(const TrainConfig& cfg, const std::filesystem::path& train_manifest,
                     const std::filesystem::path& ref_manifest, const std::filesystem::path& out_dir);

/// Continues a checkpoint for `extra_iters` iterations, appending to
/// `out_dir/loss.csv` and rewriting `out_dir/checkpoint.bin`. Manifests
/// default to those recorded in the checkpoint.
ArrayContainer resume(const ArrayContainer& ckpt, int extra_iters, const std::filesystem::path& out_dir,
                      std::optional<std::filesystem::path> train_manifest = std::nullopt,
                      std::optional<std::filesystem::path> ref_manifest = std::nullopt);

struct AblationRow {
  std::string name;
  bool use_cvae = false;
  bool use_sc_loss = false;
  bool use_discriminator = false;
  MetricsReport report;
  std::string flag;  ///< non-empty when the row breaks the expected ordering
};

/// The four cumulative configurations: baseline, +cvae, +cvae+sc,
/// +cvae+sc+disc. Each is trained from `base` and evaluated on the training
/// manifest in random mode with `n_samples` draws. Writes
/// `out_dir/ablation.csv` and one sub-directory per row.
std::vector<AblationRow> ablate(const TrainConfig& base, const std::filesystem::path& train_manifest,
                                const std::filesystem::path& ref_manifest, const std::filesystem::path& out_dir,
                                int n_samples = 10);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace refvae
