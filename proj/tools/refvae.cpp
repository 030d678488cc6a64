// refvae: train, infer, evaluate, ablate, degrade.

#include "refvae/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>

using namespace refvae;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  TrainConfig cfg = path.empty() ? TrainConfig::desk() : TrainConfig::load(path);
  std::string text = cfg.to_text();
  for (const auto& kv : overrides) {
    if (kv.find('=') == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    text += "\n" + kv;
  }
  cfg = TrainConfig::parse(text);
  cfg.validate();
  return cfg;
}

void print_summary(const MetricsReport& report) {
  std::cout << std::left << std::setw(12) << "mode" << std::right << std::setw(9) << "PSNR" << std::setw(9) << "SSIM"
            << std::setw(12) << "perceptual" << std::setw(9) << "Div" << std::setw(9) << "LR-PSNR" << "\n";
  std::cout << std::fixed;
  for (const auto& a : report.aggregates) {
    std::cout << std::left << std::setw(12) << a.mode << std::right << std::setprecision(2) << std::setw(9) << a.psnr
              << std::setprecision(4) << std::setw(9) << a.ssim << std::setw(12) << a.perceptual << std::setw(9);
    if (a.diverse_score) {
      std::cout << std::setprecision(2) << *a.diverse_score;
    } else {
      std::cout << "-";
    }
    std::cout << std::setprecision(2) << std::setw(9) << a.lr_psnr << "\n";
  }
  for (const auto& n : report.notes) std::cout << "note: " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-guided stochastic super-resolution"};
  app.require_subcommand(1);

  std::string config_path, train_manifest, ref_manifest, out_dir, checkpoint;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int resume_iters = 0;

  auto* train = app.add_subcommand("train", "Train a model (or continue one with --resume)");
  train->add_option("--config", config_path, "key = value config file (desk defaults when omitted)");
  train->add_option("--set", overrides, "Override one config key, key=value (repeatable)");
  train->add_option("--train-manifest", train_manifest, "Manifest of HR training images")->required();
  train->add_option("--ref-manifest", ref_manifest, "Manifest of reference images")->required();
  train->add_option("--out", out_dir, "Output directory for loss.csv and checkpoints")->required();
  train->add_option("--seed", seed, "Training seed (overrides the config)");
  train->add_option("--resume", checkpoint, "Continue from this checkpoint instead of starting fresh");
  train->add_option("--iterations", resume_iters, "Extra iterations when resuming")->check(CLI::NonNegativeNumber);

  std::string lr_path, mode_name = "random", reference, out_path;
  std::uint64_t infer_seed = 1;
  auto* infer = app.add_subcommand("infer", "Super-resolve one LR image");
  infer->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  infer->add_option("--lr", lr_path, "LR input PNG")->required();
  infer->add_option("--mode", mode_name, "reference | random | lr_as_ref | hr_as_ref")
      ->check(CLI::IsMember({"reference", "random", "lr_as_ref", "hr_as_ref"}));
  infer->add_option("--reference", reference, "Reference PNG (reference mode) or HR PNG (hr_as_ref mode)");
  infer->add_option("--seed", infer_seed, "Latent sampling seed");
  infer->add_option("--out", out_path, "Output SR PNG")->required();

  std::string manifest, report_path;
  std::vector<std::string> references, modes;
  int n_samples = 10;
  std::uint64_t eval_seed = 1;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a manifest of HR images");
  evaluate->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  evaluate->add_option("--manifest", manifest, "Manifest of HR images")->required();
  evaluate->add_option("--n-samples", n_samples, "Random-mode draws per image for the diverse score")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--reference", references, "Reference PNGs for reference mode, used round-robin");
  evaluate->add_option("--modes", modes, "Subset of modes (default: all four)")
      ->check(CLI::IsMember({"reference", "random", "lr_as_ref", "hr_as_ref"}));
  evaluate->add_option("--seed", eval_seed, "Degradation and sampling seed");
  evaluate->add_option("--out", report_path, "Output JSON report")->required();

  int ablate_samples = 10;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the four cumulative configurations");
  ablate_cmd->add_option("--config", config_path, "Base config file");
  ablate_cmd->add_option("--set", overrides, "Override one config key, key=value (repeatable)");
  ablate_cmd->add_option("--train-manifest", train_manifest, "Manifest of HR training images")->required();
  ablate_cmd->add_option("--ref-manifest", ref_manifest, "Manifest of reference images")->required();
  ablate_cmd->add_option("--out", out_dir, "Output directory")->required();
  ablate_cmd->add_option("--seed", seed, "Training and evaluation seed");
  ablate_cmd->add_option("--n-samples", ablate_samples, "Random-mode draws per image")->check(CLI::PositiveNumber);

  std::string hr_path;
  int scale = 8;
  double noise_std = 0.0;
  std::uint64_t degrade_seed = 1;
  auto* degrade_cmd = app.add_subcommand("degrade", "Bicubic-downsample an HR image");
  degrade_cmd->add_option("--hr", hr_path, "HR input PNG")->required();
  degrade_cmd->add_option("--scale", scale, "Downsampling factor")->check(CLI::PositiveNumber);
  degrade_cmd->add_option("--noise-std", noise_std, "Std of additive Gaussian noise")->check(CLI::NonNegativeNumber);
  degrade_cmd->add_option("--seed", degrade_seed, "Noise seed");
  degrade_cmd->add_option("--out", out_path, "Output LR PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*train) {
      if (!checkpoint.empty()) {
        if (!config_path.empty() || !overrides.empty() || seed) {
          throw UsageError("--resume continues the stored config; --config, --set and --seed are not accepted");
        }
        resume(ArrayContainer::load(checkpoint), resume_iters, out_dir, fs::path(train_manifest), fs::path(ref_manifest));
      } else {
        TrainConfig cfg = load_config(config_path, overrides);
        if (seed) cfg.seed = *seed;
        refvae::train(cfg, train_manifest, ref_manifest, out_dir);
      }
      std::cout << (fs::path(out_dir) / "checkpoint.bin").string() << "\n";
    } else if (*infer) {
      const InferenceMode mode = parse_mode(mode_name);
      const bool needs_guide = mode == InferenceMode::Reference || mode == InferenceMode::HrAsRef;
      if (needs_guide && reference.empty()) throw UsageError("mode '" + mode_name + "' requires --reference");
      const Model<Real> model = load_model(ArrayContainer::load(checkpoint));
      const Image lr = read_png(lr_path);
      std::optional<Image> guide;
      if (needs_guide) guide = read_png(reference);
      RandomStream rng({infer_seed, 0x1f});
      const Image sr = super_resolve(model, lr, mode, rng, guide ? &*guide : nullptr);
      write_png(out_path, sr);
      const LrConsistency lc = lr_consistency(sr, lr, model.config.scale);
      std::cout << out_path << "\n" << "lr_psnr " << std::fixed << std::setprecision(2) << lc.psnr << "\n";
    } else if (*evaluate) {
      const Model<Real> model = load_model(ArrayContainer::load(checkpoint));
      EvaluationOptions opt;
      if (!modes.empty()) {
        opt.modes.clear();
        for (const auto& m : modes) opt.modes.push_back(parse_mode(m));
      }
      opt.seed = eval_seed;
      opt.n_samples = n_samples;
      opt.degradation = {model.config.scale, 0.0};
      for (const auto& r : references) opt.references.emplace_back(r);
      MetricsReport report = evaluate_dataset(model, read_manifest(manifest), opt);
      report.dataset = manifest;
      report.save(report_path);
      print_summary(report);
    } else if (*ablate_cmd) {
      TrainConfig cfg = load_config(config_path, overrides);
      if (seed) cfg.seed = *seed;
      const auto rows = ablate(cfg, train_manifest, ref_manifest, out_dir, ablate_samples);
      std::cout << ablation_csv(rows);
    } else if (*degrade_cmd) {
      const DegradationConfig cfg{scale, noise_std};
      cfg.validate();
      RandomStream rng({degrade_seed, 0xde9});
      write_png(out_path, degrade(read_png(hr_path), cfg, rng));
      std::cout << out_path << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
