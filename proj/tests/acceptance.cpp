// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Artifacts go to ./acceptance_run.

#include "fixtures.hpp"
#include "gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

using namespace refvae;
using fixtures::random_image;
using fixtures::random_normal;
namespace fs = std::filesystem;

namespace {

using D = double;

// Frozen from the calibration run (iterations 1-100 vs 1901-2000 of 2000).
constexpr int kDeskIterations = 2000;
constexpr int kEarlyFirst = 1, kEarlyLast = 100;
constexpr int kLateFirst = 1901, kLateLast = 2000;
constexpr double kMaxLossRatio = 0.5;
constexpr double kMinLrPsnr = 30.0;
constexpr double kMaxTrainSeconds = 30.0 * 60.0;

/// Collects failed expectations for one criterion.
class Tally {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) failed_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool pass() const { return failed_.empty() && total_ > 0; }
  std::string detail() const {
    std::ostringstream out;
    out << (total_ - failed_.size()) << "/" << total_ << " checks";
    for (const auto& n : notes_) out << "; " << n;
    for (const auto& f : failed_) out << "; FAILED " << f;
    return out.str();
  }

 private:
  int total_ = 0;
  std::vector<std::string> failed_;
  std::vector<std::string> notes_;
};

std::string num(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

double value(const Var<D>& v) { return v.value().data(0, 0); }
Var<D> cvar(Tensor<D> t) { return Var<D>::constant(std::move(t)); }
Var<D> pvar(Tensor<D> t) { return Var<D>::parameter(std::move(t)); }

LatentDistribution<D> fixed_dist(int h, int w, int c, double mu, double log_var) {
  return {cvar(Tensor<D>::constant(h, w, c, mu)), cvar(Tensor<D>::constant(h, w, c, log_var))};
}

Image uniform_image(int h, int w, RandomStream& rng) {
  Image img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.set(y, x, c, rng.uniform());
    }
  }
  return img;
}

double luma8(const Image& img, int y, int x) {
  return std::round(16.0 + 65.481 * img.at(y, x, 0) + 128.553 * img.at(y, x, 1) + 24.966 * img.at(y, x, 2));
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<double>> read_losses(const fs::path& csv) {
  std::istringstream in(read_text(csv));
  std::string line;
  std::getline(in, line);
  if (line != kLossCsvHeader) throw std::runtime_error("unexpected loss.csv header in " + csv.string());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

enum Column { kIter, kContent, kStyle, kLpips, kTv, kKl, kAdvG, kAdvD, kTotal };

std::vector<Var<D>> vars(const ParamList<D>& params) {
  std::vector<Var<D>> out;
  for (const auto& [name, v] : params) out.push_back(v);
  return out;
}

Var<D> probe(const Var<D>& x, std::uint64_t seed) {
  RandomStream rng(seed);
  const Tensor<D>& v = x.value();
  return sum(mul(x, cvar(random_normal(v.height, v.width, v.channels(), rng))));
}

/// State shared by the training-based criteria.
struct DeskRun {
  fs::path root;
  fs::path manifest;
  TrainConfig cfg;
  std::optional<Model<Real>> model;
  std::string failure;
};

DeskRun& desk() {
  static DeskRun run;
  return run;
}

// 1 -------------------------------------------------------------------------

Tally closed_forms() {
  Tally t;
  t.expect(value(kl_divergence(fixed_dist(8, 8, 32, 0.0, 0.0))) == 0.0, "KL(mu=0, sigma=1) == 0");
  t.expect(std::abs(value(kl_divergence(fixed_dist(1, 1, 1, 1.0, 0.0))) - 0.5) <= 1e-12, "KL(mu=1, sigma=1) == 0.5");
  t.expect(value(tv_loss(cvar(Tensor<D>::constant(8, 8, 3, 0.37)), 1.0)) == 0.0, "TV(constant) == 0");

  const FeatureExtractor<D> fx;
  RandomStream rng(1);
  const Var<D> img = cvar(random_image(16, 16, rng));
  const PerceptualMetric<D> perceptual{&fx, std::nullopt, true};
  t.expect(std::abs(value(content_loss(fx, img, img, 8))) <= 1e-9, "content(x, x) == 0");
  t.expect(std::abs(value(style_loss(fx, img, img))) <= 1e-9, "style(x, x) == 0");
  t.expect(std::abs(value(perceptual_loss(perceptual, img, img))) <= 1e-9, "perceptual(x, x) == 0");
  return t;
}

// 2 -------------------------------------------------------------------------

Tally oracles() {
  Tally t;
  RandomStream rng(2);

  {
    const Var<D> c = cvar(random_normal(8, 8, 4, rng));
    const FusionStats<D> s{cvar(random_normal(8, 8, 4, rng)), cvar(random_normal(8, 8, 4, rng))};
    const Var<D> fused = fuse(c, s);
    const Tensor<D>& f = fused.value();
    double worst = 0.0;
    for (int i = 0; i < f.data.size(); ++i) {
      const double want = c.value().data.data()[i] * (1.0 + s.f_sigma.value().data.data()[i]) + s.f_mu.value().data.data()[i];
      worst = std::max(worst, std::abs(f.data.data()[i] - want));
    }
    t.expect(worst <= 1e-9, "fuse oracle (max err " + num(worst) + ")");
  }
  {
    const LatentDistribution<D> dist{cvar(random_normal(8, 8, 3, rng)), cvar(random_normal(8, 8, 3, rng))};
    double acc = 0.0;
    for (int i = 0; i < dist.mu.value().data.size(); ++i) {
      const double m = dist.mu.value().data.data()[i], l = dist.log_var.value().data.data()[i];
      acc += 0.5 * (std::exp(l) - l - 1.0 + m * m);
    }
    acc /= dist.mu.value().data.size();
    t.expect(std::abs(value(kl_divergence(dist)) - acc) <= 1e-9, "KL oracle");
  }
  {
    const Tensor<D> img = random_image(8, 8, rng);
    bool ok = true;
    for (double beta : {1.0, 1.5}) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            const double h = x > 0 ? std::pow(img.at(y, x, c) - img.at(y, x - 1, c), 2) : 0.0;
            const double v = y > 0 ? std::pow(img.at(y, x, c) - img.at(y - 1, x, c), 2) : 0.0;
            acc += std::pow(h + v, beta);
          }
        }
      }
      ok = ok && std::abs(value(tv_loss(cvar(img), beta)) - acc / (63.0 * 3.0)) <= 1e-9;
    }
    t.expect(ok, "TV oracle");
  }
  {
    const Image a = uniform_image(8, 8, rng), b = uniform_image(8, 8, rng);
    double se = 0.0;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) se += std::pow(luma8(a, y, x) - luma8(b, y, x), 2);
    }
    t.expect(std::abs(psnr(a, b) - 10.0 * std::log10(255.0 * 255.0 * 64.0 / se)) <= 1e-9, "PSNR oracle");
  }
  {
    // The 11x11 window needs at least 11 pixels a side: smallest valid input is used.
    const int n = 12;
    const Image a = uniform_image(n, n, rng), b = uniform_image(n, n, rng);
    double g[11], gs = 0.0;
    for (int i = 0; i < 11; ++i) gs += g[i] = std::exp(-(i - 5) * (i - 5) / 4.5);
    const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
    double total = 0.0;
    int windows = 0;
    for (int oy = 0; oy + 11 <= n; ++oy) {
      for (int ox = 0; ox + 11 <= n; ++ox) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < 11; ++i) {
          for (int j = 0; j < 11; ++j) {
            const double w = g[i] * g[j] / (gs * gs);
            const double va = luma8(a, oy + i, ox + j), vb = luma8(b, oy + i, ox + j);
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        }
        total += (2 * ma * mb + c1) * (2 * (sab - ma * mb) + c2) /
                 ((ma * ma + mb * mb + c1) * (saa - ma * ma + sbb - mb * mb + c2));
        ++windows;
      }
    }
    t.expect(std::abs(ssim(a, b) - total / windows) <= 1e-6, "SSIM oracle (12x12)");
  }
  {
    const double alphabet[] = {0.0, 0.5, 1.0};
    std::vector<std::array<double, 4>> maps;
    std::vector<Image> images;
    for (int code = 0; code < 81; ++code) {
      std::array<double, 4> m{};
      Image img(1, 4);
      for (int p = 0, k = code; p < 4; ++p, k /= 3) {
        m[p] = alphabet[k % 3];
        for (int c = 0; c < 3; ++c) img.set(0, p, c, m[p]);
      }
      maps.push_back(m);
      images.push_back(img);
    }
    const DenseMetric channel0 = [](const Image& s, const Image&) -> Eigen::MatrixXd { return s.plane(0); };
    const Image gt = Image::constant(1, 4, 0.0);
    long cases = 0, mismatches = 0;
    for (int i = 0; i < 81; ++i) {
      for (int j = 0; j < 81; ++j) {
        for (int k = 0; k < 81; ++k) {
          double global = std::numeric_limits<double>::infinity(), local = 0.0;
          for (int s : {i, j, k}) global = std::min(global, (maps[s][0] + maps[s][1] + maps[s][2] + maps[s][3]) / 4.0);
          for (int p = 0; p < 4; ++p) local += std::min({maps[i][p], maps[j][p], maps[k][p]});
          local /= 4.0;
          const double want = global == 0.0 ? 0.0 : (global - local) / global * 100.0;
          mismatches += diverse_score({images[i], images[j], images[k]}, gt, channel0) != want;
          ++cases;
        }
      }
    }
    t.expect(mismatches == 0, "diverse score exhaustive (" + std::to_string(mismatches) + " mismatches)");
    t.note("diverse score: " + std::to_string(cases) + " cases");
  }
  return t;
}

// 3 -------------------------------------------------------------------------

Tally gradients() {
  Tally t;
  double overall = 0.0;
  auto expect_grad = [&](const gradcheck::Result& r, double tol, const std::string& what) {
    overall = std::max(overall, r.worst);
    t.expect(r.checked > 0 && r.worst <= tol, what + " (rel err " + num(r.worst, 3) + " at " + r.where + ")");
  };

  RandomStream init(3);
  {
    const LatentDistribution<D> dist{pvar(random_normal(4, 4, 3, init)), pvar(random_normal(4, 4, 3, init, 0.5))};
    expect_grad(gradcheck::check(
                    [&] {
                      RandomStream rng(42);
                      return mean(square(sample_latent(dist, rng).z));
                    },
                    {dist.mu, dist.log_var}),
                1e-3, "reparameterised sample");
    expect_grad(gradcheck::check([&] { return kl_divergence(dist); }, {dist.mu, dist.log_var}), 1e-4, "KL");
  }
  {
    Var<D> c = pvar(random_normal(4, 4, 5, init));
    FusionStats<D> s{pvar(random_normal(4, 4, 5, init)), pvar(random_normal(4, 4, 5, init))};
    expect_grad(gradcheck::check([&] { return probe(fuse(c, s), 9); }, {c, s.f_mu, s.f_sigma}), 1e-4, "fuse");
  }
  for (bool skip : {false, true}) {
    Model<D> model(fixtures::toy_model_config(skip));
    const LrInput<D> lr = prepare_lr(model.extractor, Image::from_tensor(random_image(4, 4, init)), 8);
    const Var<D> fused = cvar(random_normal(4, 4, 8, init, 0.3));
    expect_grad(gradcheck::check([&] { return probe(decode_image(model.generator, fused, &lr.upsampled), 11); },
                                 vars(model.generator.parameters()), 24),
                1e-3, skip ? "decoder (residual)" : "decoder");
  }
  {
    const ModelConfig cfg = fixtures::toy_model_config();
    const FeatureExtractor<D> fx(cfg.extractor);
    const Var<D> sr = pvar(random_image(8, 8, init));
    const Var<D> hr = cvar(random_image(8, 8, init));
    const Var<D> ref = cvar(random_image(16, 16, init));
    const PerceptualMetric<D> perceptual{&fx, std::nullopt, true};
    RandomStream drng(8);
    const Discriminator<D> disc(DiscriminatorConfig{{4, 6}, 1}, drng);
    expect_grad(gradcheck::check([&] { return content_loss(fx, sr, hr, 8); }, {sr}), 1e-3, "content");
    expect_grad(gradcheck::check([&] { return style_loss(fx, sr, ref); }, {sr}), 1e-3, "style");
    expect_grad(gradcheck::check([&] { return perceptual_loss(perceptual, sr, hr); }, {sr}), 1e-3, "perceptual");
    expect_grad(gradcheck::check([&] { return tv_loss(sr, 1.0); }, {sr}), 1e-3, "tv");
    expect_grad(gradcheck::check([&] { return adversarial_g_loss(disc, sr); }, {sr}), 1e-3, "adv_g");
    expect_grad(gradcheck::check([&] { return adversarial_d_loss(disc, hr, sr); }, vars(disc.parameters()), 24), 1e-3,
                "adv_d");
  }
  t.note("worst relative error " + num(overall, 3));
  return t;
}

// 4 -------------------------------------------------------------------------

Tally shapes() {
  Tally t;
  const ModelConfig cfg;
  const Model<Real> model(cfg);
  for (auto [h, w] : {std::pair{17, 23}, {64, 64}, {200, 120}, {300, 41}}) {
    const FeatureMap<Real> ref = encode_reference(model.extractor, fixtures::desk_image(1, h, w));
    const LatentDistribution<Real> dist = feature_encode(model.cvae, ref);
    const Tensor<Real>& mu = dist.mu.value();
    t.expect(mu.height == 8 && mu.width == 8 && mu.channels() == 32,
             "reference " + std::to_string(h) + "x" + std::to_string(w) + " latent " + mu.shape_string());
  }
  for (int scale : {4, 8}) {
    ModelConfig c;
    c.scale = scale;
    c.lr_skip = true;
    const Model<Real> m(c);
    for (auto [h, w] : {std::pair{16, 16}, {12, 20}}) {
      const Image lr = bicubic_resize(fixtures::desk_image(0, h * scale, w * scale), h, w);
      RandomStream rng(4);
      const Image sr = super_resolve(m, lr, InferenceMode::Random, rng);
      t.expect(sr.height() == scale * h && sr.width() == scale * w,
               "x" + std::to_string(scale) + " on " + std::to_string(h) + "x" + std::to_string(w));
    }
  }
  const auto taps = refvae::taps(model.extractor, fixtures::desk_image(2, 64, 64));
  for (int i = 0; i < 4; ++i) {
    t.expect(taps[i].height() == 64 >> i && taps[i].width() == 64 >> i, std::string("tap ") + kTapNames[i] + " size");
  }
  return t;
}

// 5 -------------------------------------------------------------------------

Tally determinism() {
  Tally t;
  const fs::path root = desk().root / "determinism";
  const fs::path manifest = fixtures::write_corpus(root / "corpus", 3, 96);
  TrainConfig cfg = TrainConfig::desk();
  cfg.batch = 2;
  cfg.patch = 8;
  cfg.iterations = 10;

  const ArrayContainer a = train(cfg, manifest, manifest, root / "a");
  const ArrayContainer b = train(cfg, manifest, manifest, root / "b");
  t.expect(read_text(root / "a" / "loss.csv") == read_text(root / "b" / "loss.csv"), "loss CSVs identical");
  t.expect(read_text(root / "a" / "checkpoint.bin") == read_text(root / "b" / "checkpoint.bin"), "checkpoints identical");

  const Model<Real> ma = load_model(a), mb = load_model(b);
  const Image lr = bicubic_resize(fixtures::desk_image(3, 128, 128), 16, 16);
  const Image guide = fixtures::desk_image(0, 96, 96);
  bool same_sr = true;
  for (InferenceMode mode : {InferenceMode::Reference, InferenceMode::Random, InferenceMode::LrAsRef, InferenceMode::HrAsRef}) {
    RandomStream ra(11), rb(11);
    same_sr = same_sr && super_resolve(ma, lr, mode, ra, &guide) == super_resolve(mb, lr, mode, rb, &guide);
  }
  t.expect(same_sr, "SR outputs bit-identical in all modes");

  TrainConfig whole = cfg;
  whole.iterations = 20;
  const ArrayContainer full = train(whole, manifest, manifest, root / "whole");
  const ArrayContainer split = resume(train(cfg, manifest, manifest, root / "split"), 10, root / "split");
  t.expect(full.arrays == split.arrays, "train 20 == train 10 + resume 10 (parameters and optimiser state)");
  t.expect(read_text(root / "whole" / "loss.csv") == read_text(root / "split" / "loss.csv"), "split-run loss CSV identical");
  return t;
}

// 6 -------------------------------------------------------------------------

Tally desk_overfit() {
  Tally t;
  DeskRun& run = desk();
  run.manifest = fixtures::write_corpus(run.root / "corpus", 4, 128);
  run.cfg = TrainConfig::desk();
  run.cfg.iterations = kDeskIterations;
  const fs::path out = run.root / "desk";

  const auto start = std::chrono::steady_clock::now();
  const ArrayContainer ckpt = train(run.cfg, run.manifest, run.manifest, out);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.model = load_model(ckpt);
  t.expect(seconds < kMaxTrainSeconds, "training time " + num(seconds) + " s");
  t.note("trained " + std::to_string(kDeskIterations) + " its in " + num(seconds) + " s");

  const auto rows = read_losses(out / "loss.csv");
  t.expect(static_cast<int>(rows.size()) == kDeskIterations, "loss.csv has one row per iteration");
  auto window_mean = [&](int first, int last, bool adversarial) {
    double acc = 0.0;
    for (int i = first; i <= last; ++i) {
      const auto& r = rows.at(i - 1);
      acc += adversarial ? r[kTotal] : r[kTotal] - run.cfg.weights.adversarial * r[kAdvG];
    }
    return acc / (last - first + 1);
  };
  const double early = window_mean(kEarlyFirst, kEarlyLast, true), late = window_mean(kLateFirst, kLateLast, true);
  const double early_na = window_mean(kEarlyFirst, kEarlyLast, false), late_na = window_mean(kLateFirst, kLateLast, false);
  t.expect(early > 0.0 && late <= kMaxLossRatio * early, "total loss late/early " + num(late) + "/" + num(early));
  t.expect(early_na > 0.0 && late_na <= kMaxLossRatio * early_na,
           "non-adversarial loss late/early " + num(late_na) + "/" + num(early_na));
  t.note("total " + num(early) + " -> " + num(late) + ", without adv_g " + num(early_na) + " -> " + num(late_na) +
         " (ratio " + num(late_na / early_na, 3) + ")");

  double worst = std::numeric_limits<double>::infinity(), mean_psnr = 0.0;
  const auto paths = read_manifest(run.manifest);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Image hr = read_png(paths[i]);
    RandomStream drng(1);
    const Image lr = degrade(hr, run.cfg.degradation(), drng);
    RandomStream rng({run.cfg.seed, i, 0x6});
    const double p = lr_consistency(super_resolve(*run.model, lr, InferenceMode::Random, rng), lr, run.cfg.scale).psnr;
    worst = std::min(worst, p);
    mean_psnr += p / static_cast<double>(paths.size());
  }
  t.expect(worst >= kMinLrPsnr, "random-mode LR-PSNR min " + num(worst) + " dB");
  t.note("random-mode LR-PSNR mean " + num(mean_psnr) + " dB, min " + num(worst) + " dB");
  return t;
}

// 7 -------------------------------------------------------------------------

Tally diversity() {
  Tally t;
  DeskRun& run = desk();
  if (!run.model) throw std::runtime_error("no trained desk model (criterion 6 did not complete)");

  TrainConfig no_cvae = run.cfg;
  no_cvae.use_cvae = false;
  no_cvae.iterations = 100;
  const Model<Real> plain = load_model(train(no_cvae, run.manifest, run.manifest, run.root / "no_cvae"));
  EvaluationOptions opt;
  opt.modes = {InferenceMode::Random};
  opt.n_samples = 10;
  opt.degradation = run.cfg.degradation();
  const auto paths = read_manifest(run.manifest);
  const double div_plain = *evaluate_dataset(plain, paths, opt).aggregate("random")->diverse_score;
  t.expect(div_plain == 0.0, "use_cvae=false diverse score " + num(div_plain));

  const double div = *evaluate_dataset(*run.model, paths, opt).aggregate("random")->diverse_score;
  t.expect(div > 0.0, "use_cvae=true diverse score " + num(div));

  double min_pair = std::numeric_limits<double>::infinity(), min_psnr = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Image hr = read_png(paths[i]);
    RandomStream drng(2);
    const Image lr = degrade(hr, run.cfg.degradation(), drng);
    std::vector<Image> samples;
    for (std::uint64_t s = 0; s < 10; ++s) {
      RandomStream rng({77, i, s});
      samples.push_back(super_resolve(*run.model, lr, InferenceMode::Random, rng));
      min_psnr = std::min(min_psnr, lr_consistency(samples.back(), lr, run.cfg.scale).psnr);
    }
    for (std::size_t a = 0; a < samples.size(); ++a) {
      for (std::size_t b = a + 1; b < samples.size(); ++b) {
        min_pair = std::min(min_pair, (samples[a].pixels() - samples[b].pixels()).cwiseAbs().maxCoeff());
      }
    }
  }
  t.expect(min_pair > 1.0 / 255.0, "smallest pairwise max-abs diff " + num(min_pair * 255.0) + "/255");
  t.expect(min_psnr >= kMinLrPsnr, "every sample LR-PSNR >= " + num(kMinLrPsnr) + " (min " + num(min_psnr) + ")");
  t.note("Div " + num(div) + " vs 0 without cvae; 10 samples x " + std::to_string(paths.size()) + " images");
  return t;
}

// 8 -------------------------------------------------------------------------

Tally modes() {
  Tally t;
  DeskRun& run = desk();
  if (!run.model) throw std::runtime_error("no trained desk model (criterion 6 did not complete)");
  EvaluationOptions opt;
  opt.n_samples = 4;
  opt.degradation = run.cfg.degradation();
  const auto paths = read_manifest(run.manifest);
  MetricsReport report = evaluate_dataset(*run.model, paths, opt);
  report.dataset = run.manifest.string();
  report.save(run.root / "report.json");
  std::cout << report.to_csv();

  t.expect(report.aggregates.size() == 4, "four aggregate rows");
  for (const char* mode : {"reference", "random", "lr_as_ref", "hr_as_ref"}) {
    const MetricAggregate* a = report.aggregate(mode);
    t.expect(a && a->count == static_cast<int>(paths.size()), std::string("mode ") + mode + " scored on every image");
  }
  t.expect(report.records.size() == 4 * paths.size(), "one record per image and mode");
  t.expect(MetricsReport::load(run.root / "report.json") == report, "report JSON roundtrip");
  return t;
}

}  // namespace

int main() {
  desk().root = fs::absolute("acceptance_run");
  fs::remove_all(desk().root);
  fs::create_directories(desk().root);

  const std::pair<int, std::function<Tally()>> criteria[] = {
      {1, closed_forms}, {2, oracles}, {3, gradients}, {4, shapes},
      {5, determinism},  {6, desk_overfit}, {7, diversity}, {8, modes},
  };
  int failures = 0;
  for (const auto& [n, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
      const Tally t = fn();
      pass = t.pass();
      detail = t.detail();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << " [" << num(seconds, 3) << " s]"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
