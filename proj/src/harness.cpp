#include "refvae/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace refvae {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<Image> load_images(const std::filesystem::path& manifest) {
  const auto paths = read_manifest(manifest);
  if (paths.empty()) throw std::invalid_argument("manifest " + manifest.string() + " lists no images");
  std::vector<Image> out;
  for (const auto& p : paths) out.push_back(read_png(p));
  return out;
}

}  // namespace

std::string LossRecord::csv_row() const {
  return std::to_string(iter) + "," + fmt(parts.content) + "," + fmt(parts.style) + "," + fmt(parts.lpips) + "," +
         fmt(parts.tv) + "," + fmt(parts.kl) + "," + fmt(parts.adversarial) + "," + fmt(adv_d) + "," + fmt(total);
}

TrainData TrainData::load(const std::filesystem::path& train_manifest, const std::filesystem::path& ref_manifest) {
  return {train_manifest, ref_manifest, load_images(train_manifest), load_images(ref_manifest)};
}

FeatureExtractor<Real> make_extractor(const TrainConfig& cfg) {
  const ExtractorConfig ec = cfg.model_config().extractor;
  if (cfg.extractor_weights.empty()) return FeatureExtractor<Real>(ec);
  return FeatureExtractor<Real>::from_container(ec, ArrayContainer::load(cfg.extractor_weights));
}

Trainer::Trainer(TrainConfig cfg, TrainData data)
    : cfg_(std::move(cfg)),
      data_(std::move(data)),
      model_(cfg_.model_config(), make_extractor(cfg_)),
      gen_opt_(model_.generator_parameters(), cfg_.adam),
      disc_opt_(model_.discriminator.parameters(), cfg_.adam),
      perceptual_{&model_.extractor, std::nullopt, true} {
  cfg_.validate();
  if (data_.train.empty() || data_.refs.empty()) throw std::invalid_argument("Trainer: manifests must be non-empty");
  for (const auto& img : data_.train) {
    if (img.height() < cfg_.hr_patch() || img.width() < cfg_.hr_patch()) {
      throw std::invalid_argument("Trainer: training image smaller than the " + std::to_string(cfg_.hr_patch()) +
                                  " HR patch");
    }
  }
}

Trainer Trainer::from_checkpoint(const ArrayContainer& ckpt, TrainData data) {
  Trainer t(checkpoint_config(ckpt), std::move(data));
  Model<Real> restored = load_model(ckpt);
  ParamList<Real> dst = t.model_.generator_parameters();
  for (auto& p : t.model_.discriminator.parameters()) dst.push_back(p);
  ArrayContainer params;
  store_params(restored.generator_parameters(), params);
  store_params(restored.discriminator.parameters(), params);
  load_params(dst, params);
  t.gen_opt_.load("adam.generator", ckpt);
  t.disc_opt_.load("adam.discriminator", ckpt);
  t.iteration_ = std::stol(ckpt.get_text("iteration"));
  t.gen_opt_.set_steps(t.iteration_);
  t.disc_opt_.set_steps(std::stol(ckpt.get_text("discriminator_steps")));
  return t;
}

const Trainer::RefEntry& Trainer::reference(int index) {
  auto it = ref_cache_.find(index);
  if (it == ref_cache_.end()) {
    const int n = cfg_.canonical_ref;
    const Image& ref = data_.refs[index];
    const Image resized = (ref.height() == n && ref.width() == n) ? ref : bicubic_resize(ref, n, n);
    auto t = model_.extractor.taps(image_var<Real>(resized));
    it = ref_cache_.emplace(index, RefEntry{t[3], tap_statistics(t)}).first;
  }
  return it->second;
}

Trainer::HrEntry Trainer::make_entry(const Image& hr, const Image& lr) const {
  Var<Real> hr_var = image_var<Real>(hr);
  auto t = model_.extractor.taps(hr_var);
  return {hr_var, t, tap_statistics(t), prepare_lr(model_.extractor, lr, cfg_.scale)};
}

Trainer::HrEntry Trainer::sample_patch(RandomStream& rng) {
  const int idx = rng.index(static_cast<int>(data_.train.size()));
  const Image& img = data_.train[idx];
  const int p = cfg_.hr_patch();
  const int y = rng.index(img.height() - p + 1);
  const int x = rng.index(img.width() - p + 1);
  const bool whole = img.height() == p && img.width() == p;
  if (whole && cfg_.noise_std == 0.0) {
    auto it = hr_cache_.find(idx);
    if (it == hr_cache_.end()) {
      RandomStream unused(0);
      it = hr_cache_.emplace(idx, make_entry(img, degrade(img, cfg_.degradation(), unused))).first;
    }
    return it->second;
  }
  const Image hr = whole ? img : img.crop(y, x, p, p);
  return make_entry(hr, degrade(hr, cfg_.degradation(), rng));
}

LossRecord Trainer::step() {
  RandomStream rng({cfg_.seed, static_cast<std::uint64_t>(iteration_), 0x7a1});
  const LossWeights& w = cfg_.weights;
  const bool use_disc = cfg_.use_discriminator;
  const Real inv_batch = Real(1) / static_cast<Real>(cfg_.batch);
  const RefEntry& ref = reference(rng.index(static_cast<int>(data_.refs.size())));

  LossRecord rec;
  rec.iter = iteration_ + 1;
  gen_opt_.zero_grad();
  std::vector<std::pair<Var<Real>, Var<Real>>> real_fake;
  try {
    for (int b = 0; b < cfg_.batch; ++b) {
      const HrEntry sample = sample_patch(rng);
      const ForwardResult<Real> r = forward(model_, sample.lr, &ref.final_tap, rng);
      const auto sr_taps = model_.extractor.taps(r.sr);

      std::vector<Var<Real>> terms;
      std::vector<Real> weights;
      auto push = [&](double weight, const Var<Real>& term) {
        terms.push_back(term);
        weights.push_back(static_cast<Real>(weight));
        return static_cast<double>(term.item());
      };
      LossParts parts;
      Var<Real> content = add(mean_abs_diff(r.sr, sample.hr),
                              mean_abs_diff(bicubic_down(r.sr, cfg_.scale), bicubic_down(sample.hr, cfg_.scale)));
      if (cfg_.use_sc_loss) content = add(mean_abs_diff(sr_taps[3].values, sample.taps[3].values), content);
      parts.content = push(w.content, content);
      if (cfg_.use_sc_loss) {
        const TapStatistics<Real>& target = cfg_.style_target == StyleTarget::Reference ? ref.stats : sample.stats;
        parts.style = push(w.style, style_loss(tap_statistics(sr_taps), target));
      }
      parts.lpips = push(w.lpips, perceptual_(sr_taps, sample.taps));
      parts.tv = push(w.tv, tv_loss(r.sr, w.tv_beta));
      if (r.posterior) parts.kl = push(w.kl, kl_divergence(*r.posterior));
      if (use_disc) parts.adversarial = push(w.adversarial, adversarial_g_loss(model_.discriminator, r.sr));

      const double total = total_loss(w, parts);
      weighted_sum(terms, weights).backward(MatrixX<Real>::Constant(1, 1, inv_batch));

      rec.parts.content += parts.content / cfg_.batch;
      rec.parts.style += parts.style / cfg_.batch;
      rec.parts.lpips += parts.lpips / cfg_.batch;
      rec.parts.tv += parts.tv / cfg_.batch;
      rec.parts.kl += parts.kl / cfg_.batch;
      rec.parts.adversarial += parts.adversarial / cfg_.batch;
      rec.total += total / cfg_.batch;
      if (use_disc) real_fake.emplace_back(sample.hr, r.sr.detach());
    }
  } catch (const std::domain_error& e) {
    throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(rec.iter));
  }
  gen_opt_.step();

  if (use_disc) {
    disc_opt_.zero_grad();
    for (const auto& [real, fake] : real_fake) {
      Var<Real> d = adversarial_d_loss(model_.discriminator, real, fake);
      if (!std::isfinite(d.item())) {
        throw NumericError("non-finite loss term 'adv_d' at iteration " + std::to_string(rec.iter));
      }
      rec.adv_d += static_cast<double>(d.item()) / cfg_.batch;
      d.backward(MatrixX<Real>::Constant(1, 1, inv_batch));
    }
    disc_opt_.step();
  }
  ++iteration_;
  return rec;
}

ArrayContainer Trainer::checkpoint() const {
  ArrayContainer c;
  c.text["format"] = kCheckpointFormat;
  c.text["format_version"] = std::to_string(kCheckpointVersion);
  c.text["config"] = cfg_.to_text();
  c.text["iteration"] = std::to_string(iteration_);
  c.text["discriminator_steps"] = std::to_string(disc_opt_.steps());
  c.text["extractor_hash"] = std::to_string(model_.extractor.hash());
  c.text["train_manifest"] = data_.train_manifest.string();
  c.text["ref_manifest"] = data_.ref_manifest.string();
  store_params(model_.generator_parameters(), c);
  store_params(model_.discriminator.parameters(), c);
  gen_opt_.store("adam.generator", c);
  disc_opt_.store("adam.discriminator", c);
  return c;
}

TrainConfig checkpoint_config(const ArrayContainer& ckpt) {
  auto it = ckpt.text.find("format");
  if (it == ckpt.text.end() || it->second != kCheckpointFormat) throw FormatError("not a refvae checkpoint");
  const std::string& version = ckpt.get_text("format_version");
  if (version != std::to_string(kCheckpointVersion)) {
    throw FormatError("checkpoint format version " + version + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  return TrainConfig::parse(ckpt.get_text("config"));
}

Model<Real> load_model(const ArrayContainer& ckpt) {
  const TrainConfig cfg = checkpoint_config(ckpt);
  Model<Real> model(cfg.model_config(), make_extractor(cfg));
  if (std::to_string(model.extractor.hash()) != ckpt.get_text("extractor_hash")) {
    throw FormatError("checkpoint was trained with a different feature extractor (hash mismatch)");
  }
  ParamList<Real> params = model.generator_parameters();
  for (auto& p : model.discriminator.parameters()) params.push_back(p);
  load_params(params, ckpt);
  return model;
}

namespace {

ArrayContainer run_iterations(Trainer& trainer, int iterations, const std::filesystem::path& out_dir, bool append) {
  std::filesystem::create_directories(out_dir);
  const auto csv_path = out_dir / "loss.csv";
  const bool write_header = !append || !std::filesystem::exists(csv_path);
  std::ofstream csv(csv_path, append ? std::ios::app : std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  if (write_header) csv << kLossCsvHeader << "\n";
  const int every = trainer.config().checkpoint_every;
  for (int i = 0; i < iterations; ++i) {
    const LossRecord rec = trainer.step();
    csv << rec.csv_row() << "\n";
    if (every > 0 && trainer.iteration() % every == 0) {
      trainer.checkpoint().save(out_dir / ("checkpoint_" + std::to_string(trainer.iteration()) + ".bin"));
    }
  }
  csv.flush();
  ArrayContainer ckpt = trainer.checkpoint();
  ckpt.save(out_dir / "checkpoint.bin");
  return ckpt;
}

}  // namespace

ArrayContainer train(const TrainConfig& cfg, const std::filesystem::path& train_manifest,
                     const std::filesystem::path& ref_manifest, const std::filesystem::path& out_dir) {
  cfg.validate();
  Trainer trainer(cfg, TrainData::load(train_manifest, ref_manifest));
  return run_iterations(trainer, cfg.iterations, out_dir, false);
}

ArrayContainer resume(const ArrayContainer& ckpt, int extra_iters, const std::filesystem::path& out_dir,
                      std::optional<std::filesystem::path> train_manifest,
                      std::optional<std::filesystem::path> ref_manifest) {
  if (extra_iters < 0) throw std::invalid_argument("resume: extra_iters must be >= 0");
  checkpoint_config(ckpt);
  const auto tm = train_manifest.value_or(ckpt.get_text("train_manifest"));
  const auto rm = ref_manifest.value_or(ckpt.get_text("ref_manifest"));
  Trainer trainer = Trainer::from_checkpoint(ckpt, TrainData::load(tm, rm));
  return run_iterations(trainer, extra_iters, out_dir, true);
}

std::vector<AblationRow> ablate(const TrainConfig& base, const std::filesystem::path& train_manifest,
                                const std::filesystem::path& ref_manifest, const std::filesystem::path& out_dir,
                                int n_samples) {
  struct Variant {
    const char* name;
    bool cvae, sc, disc;
  };
  const Variant variants[] = {{"baseline", false, false, false},
                              {"+cvae", true, false, false},
                              {"+cvae+sc", true, true, false},
                              {"+cvae+sc+disc", true, true, true}};
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < std::size(variants); ++i) {
    const Variant& v = variants[i];
    TrainConfig cfg = base;
    cfg.use_cvae = v.cvae;
    cfg.use_sc_loss = v.sc;
    cfg.use_discriminator = v.disc;
    const auto row_dir = out_dir / ("row" + std::to_string(i + 1));
    const ArrayContainer ckpt = train(cfg, train_manifest, ref_manifest, row_dir);
    const Model<Real> model = load_model(ckpt);
    EvaluationOptions opt;
    opt.modes = {InferenceMode::Random};
    opt.seed = cfg.seed;
    opt.n_samples = n_samples;
    opt.degradation = cfg.degradation();
    MetricsReport report = evaluate_dataset(model, read_manifest(train_manifest), opt);
    report.dataset = train_manifest.string();
    report.save(row_dir / "report.json");
    rows.push_back({v.name, v.cvae, v.sc, v.disc, std::move(report), ""});
  }
  auto perceptual = [](const AblationRow& r) { return r.report.aggregates.at(0).perceptual; };
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (perceptual(rows[i]) < perceptual(rows.back())) rows.back().flag = "perceptual_not_lowest";
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream(out_dir / "ablation.csv", std::ios::trunc) << ablation_csv(rows);
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "row,use_cvae,use_sc_loss,use_discriminator,psnr,ssim,perceptual,div,lr_psnr,flag\n";
  for (const auto& r : rows) {
    const MetricAggregate& a = r.report.aggregates.at(0);
    out << r.name << ',' << r.use_cvae << ',' << r.use_sc_loss << ',' << r.use_discriminator << ',' << fmt(a.psnr)
        << ',' << fmt(a.ssim) << ',' << fmt(a.perceptual) << ',' << (a.diverse_score ? fmt(*a.diverse_score) : "")
        << ',' << fmt(a.lr_psnr) << ',' << r.flag << '\n';
  }
  return out.str();
}

}  // namespace refvae
