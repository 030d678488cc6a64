#include "refvae/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace refvae {

namespace {

void require_same_size(const Image& a, const Image& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument(std::string(what) + ": image sizes differ");
  }
}

/// Planes compared by the metrics, on the 0..255 scale after rounding.
std::vector<Eigen::MatrixXd> quantized_planes(const Image& img, const MetricOptions& opt) {
  std::vector<Eigen::MatrixXd> planes;
  if (opt.y_only) {
    planes.push_back(luma_255(img).array().round().matrix());
  } else {
    for (int c = 0; c < 3; ++c) planes.push_back((img.plane(c).array() * 255.0).round().matrix());
  }
  if (opt.border > 0) {
    const int h = img.height() - 2 * opt.border, w = img.width() - 2 * opt.border;
    if (h < 1 || w < 1) throw std::invalid_argument("metric border crop removes the whole image");
    for (auto& p : planes) p = p.block(opt.border, opt.border, h, w).eval();
  }
  return planes;
}

/// (out × in) matrix applying the normalised 11-tap Gaussian at every valid
/// offset.
Eigen::MatrixXd gaussian_valid_filter(int n) {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  Eigen::VectorXd g(kSize);
  for (int i = 0; i < kSize; ++i) g(i) = std::exp(-((i - 5) * (i - 5)) / (2.0 * kSigma * kSigma));
  g /= g.sum();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n - kSize + 1, n);
  for (int o = 0; o < n - kSize + 1; ++o) f.row(o).segment(o, kSize) = g.transpose();
  return f;
}

double ssim_plane(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const Eigen::MatrixXd fy = gaussian_valid_filter(static_cast<int>(a.rows()));
  const Eigen::MatrixXd fx = gaussian_valid_filter(static_cast<int>(a.cols()));
  auto blur = [&](const Eigen::MatrixXd& m) -> Eigen::ArrayXXd { return (fy * m * fx.transpose()).array(); };
  const Eigen::ArrayXXd mu_a = blur(a), mu_b = blur(b);
  const Eigen::ArrayXXd var_a = blur(a.cwiseProduct(a)) - mu_a.square();
  const Eigen::ArrayXXd var_b = blur(b.cwiseProduct(b)) - mu_b.square();
  const Eigen::ArrayXXd cov = blur(a.cwiseProduct(b)) - mu_a * mu_b;
  const Eigen::ArrayXXd map =
      ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
  return map.mean();
}

}  // namespace

double psnr(const Image& a, const Image& b, const MetricOptions& opt) {
  require_same_size(a, b, "psnr");
  const auto pa = quantized_planes(a, opt), pb = quantized_planes(b, opt);
  double se = 0.0, count = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    se += (pa[i] - pb[i]).squaredNorm();
    count += static_cast<double>(pa[i].size());
  }
  const double mse = se / count;
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const Image& a, const Image& b, const MetricOptions& opt) {
  require_same_size(a, b, "ssim");
  const auto pa = quantized_planes(a, opt), pb = quantized_planes(b, opt);
  if (pa[0].rows() < 11 || pa[0].cols() < 11) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  double total = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) total += ssim_plane(pa[i], pb[i]);
  return total / static_cast<double>(pa.size());
}

Eigen::MatrixXd abs_error_map(const Image& sample, const Image& gt) {
  require_same_size(sample, gt, "abs_error_map");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(gt.height(), gt.width());
  for (int c = 0; c < 3; ++c) out += (sample.plane(c) - gt.plane(c)).cwiseAbs();
  return out / 3.0;
}

double diverse_score(const std::vector<Image>& samples, const Image& gt, const DenseMetric& metric) {
  if (samples.size() < 2) throw std::invalid_argument("diverse_score: need at least 2 samples");
  std::vector<Eigen::MatrixXd> maps;
  maps.reserve(samples.size());
  for (const auto& s : samples) {
    require_same_size(s, gt, "diverse_score");
    maps.push_back(metric(s, gt));
  }
  Eigen::MatrixXd best = maps[0];
  double global = maps[0].mean();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    best = best.cwiseMin(maps[i]);
    global = std::min(global, maps[i].mean());
  }
  if (global == 0.0) return 0.0;
  const double local = best.mean();
  return (global - local) / global * 100.0;
}

LrConsistency lr_consistency(const Image& sr, const Image& lr, int scale, const MetricOptions& opt) {
  if (scale < 1 || sr.height() != scale * lr.height() || sr.width() != scale * lr.width()) {
    throw std::invalid_argument("lr_consistency: SR size must be scale x LR size");
  }
  const Image down = bicubic_resize(sr, lr.height(), lr.width());
  return {psnr(down, lr, opt), ssim(down, lr, opt)};
}

void MetricsReport::recompute_aggregates() {
  aggregates.clear();
  for (const auto& r : records) {
    if (aggregate(r.mode)) continue;
    MetricAggregate agg;
    agg.mode = r.mode;
    aggregates.push_back(agg);
  }
  for (auto& agg : aggregates) {
    double div_sum = 0.0;
    int div_count = 0;
    for (const auto& r : records) {
      if (r.mode != agg.mode) continue;
      ++agg.count;
      agg.psnr += r.psnr;
      agg.ssim += r.ssim;
      agg.perceptual += r.perceptual;
      agg.lr_psnr += r.lr_psnr;
      agg.lr_ssim += r.lr_ssim;
      if (r.diverse_score) {
        div_sum += *r.diverse_score;
        ++div_count;
      }
    }
    const double n = agg.count;
    agg.psnr /= n;
    agg.ssim /= n;
    agg.perceptual /= n;
    agg.lr_psnr /= n;
    agg.lr_ssim /= n;
    if (div_count > 0) agg.diverse_score = div_sum / div_count;
  }
}

const MetricAggregate* MetricsReport::aggregate(const std::string& mode) const {
  for (const auto& a : aggregates) {
    if (a.mode == mode) return &a;
  }
  return nullptr;
}

namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string MetricsReport::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["dataset"] = dataset;
  j["modes"] = modes;
  j["seed"] = seed;
  j["n_samples"] = n_samples;
  j["notes"] = notes;
  j["records"] = json::array();
  for (const auto& r : records) {
    j["records"].push_back({{"image", r.image},
                            {"mode", r.mode},
                            {"psnr", r.psnr},
                            {"ssim", r.ssim},
                            {"perceptual", r.perceptual},
                            {"lr_psnr", r.lr_psnr},
                            {"lr_ssim", r.lr_ssim},
                            {"diverse_score", optional_json(r.diverse_score)}});
  }
  j["aggregates"] = json::array();
  for (const auto& a : aggregates) {
    j["aggregates"].push_back({{"mode", a.mode},
                               {"count", a.count},
                               {"psnr", a.psnr},
                               {"ssim", a.ssim},
                               {"perceptual", a.perceptual},
                               {"lr_psnr", a.lr_psnr},
                               {"lr_ssim", a.lr_ssim},
                               {"diverse_score", optional_json(a.diverse_score)}});
  }
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricsReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kSchemaVersion) {
    throw std::runtime_error("unsupported report schema version " + std::to_string(r.schema_version));
  }
  r.dataset = j.at("dataset").get<std::string>();
  r.modes = j.at("modes").get<std::vector<std::string>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_samples = j.at("n_samples").get<int>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  for (const auto& e : j.at("records")) {
    r.records.push_back({e.at("image").get<std::string>(), e.at("mode").get<std::string>(), e.at("psnr").get<double>(),
                         e.at("ssim").get<double>(), e.at("perceptual").get<double>(), e.at("lr_psnr").get<double>(),
                         e.at("lr_ssim").get<double>(), optional_from(e.at("diverse_score"))});
  }
  for (const auto& e : j.at("aggregates")) {
    r.aggregates.push_back({e.at("mode").get<std::string>(), e.at("count").get<int>(), e.at("psnr").get<double>(),
                            e.at("ssim").get<double>(), e.at("perceptual").get<double>(), e.at("lr_psnr").get<double>(),
                            e.at("lr_ssim").get<double>(), optional_from(e.at("diverse_score"))});
  }
  return r;
}

void MetricsReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json();
}

MetricsReport MetricsReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "mode,count,psnr,ssim,perceptual,div,lr_psnr,lr_ssim\n" << std::setprecision(10);
  for (const auto& a : aggregates) {
    out << a.mode << ',' << a.count << ',' << a.psnr << ',' << a.ssim << ',' << a.perceptual << ',';
    if (a.diverse_score) out << *a.diverse_score;
    out << ',' << a.lr_psnr << ',' << a.lr_ssim << '\n';
  }
  return out.str();
}

}  // namespace refvae
