#include "refvae/imaging.hpp"

#include "refvae/resample.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace refvae {

Image::Image(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw std::invalid_argument("Image: dimensions must be positive");
  pixels_ = Pixels::Zero(static_cast<Eigen::Index>(height) * width, 3);
}

Image::Image(int height, int width, Pixels pixels) : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 1 || width < 1) throw std::invalid_argument("Image: dimensions must be positive");
  if (pixels_.rows() != static_cast<Eigen::Index>(height) * width) throw std::invalid_argument("Image: pixel count mismatch");
  if (!pixels_.allFinite() || pixels_.minCoeff() < 0.0 || pixels_.maxCoeff() > 1.0) {
    throw std::invalid_argument("Image: pixel values must lie in [0, 1]");
  }
}

Image Image::clamped(int height, int width, Pixels pixels) {
  if (!pixels.allFinite()) throw std::invalid_argument("Image: non-finite pixel values");
  return Image(height, width, Pixels(pixels.cwiseMax(0.0).cwiseMin(1.0)));
}

Image Image::constant(int height, int width, double value) {
  return Image(height, width, Pixels::Constant(static_cast<Eigen::Index>(height) * width, 3, value));
}

void Image::set(int y, int x, int c, double v) {
  pixels_(static_cast<Eigen::Index>(y) * width_ + x, c) = std::clamp(v, 0.0, 1.0);
}

Image Image::crop(int y0, int x0, int h, int w) const {
  if (y0 < 0 || x0 < 0 || y0 + h > height_ || x0 + w > width_) throw std::out_of_range("Image::crop: window outside image");
  Pixels out(static_cast<Eigen::Index>(h) * w, 3);
  for (int c = 0; c < 3; ++c) {
    Eigen::Map<RowMajorX<double>>(out.col(c).data(), h, w) = plane(c).block(y0, x0, h, w);
  }
  return Image(h, w, std::move(out));
}

namespace {

// Rows map (R, G, B) in [0, 1] to (Y, Cb, Cr) on the 0..255 scale.
const Eigen::Matrix3d kYcbcrMatrix = (Eigen::Matrix3d() << 65.481, 128.553, 24.966,  //
                                      -37.797, -74.203, 112.0,                        //
                                      112.0, -93.786, -18.214)
                                         .finished();
const Eigen::RowVector3d kYcbcrOffset(16.0, 128.0, 128.0);

}  // namespace

Image rgb_to_ycbcr(const Image& img) {
  Image::Pixels out = ((img.pixels() * kYcbcrMatrix.transpose()).rowwise() + kYcbcrOffset) / 255.0;
  return Image::clamped(img.height(), img.width(), std::move(out));
}

Image ycbcr_to_rgb(const Image& img) {
  static const Eigen::Matrix3d inverse = kYcbcrMatrix.inverse();
  Image::Pixels out = ((img.pixels() * 255.0).rowwise() - kYcbcrOffset) * inverse.transpose();
  return Image::clamped(img.height(), img.width(), std::move(out));
}

Eigen::MatrixXd luma_255(const Image& img) {
  Eigen::VectorXd y = (img.pixels() * kYcbcrMatrix.row(0).transpose()).array() + kYcbcrOffset(0);
  return Eigen::Map<RowMajorX<double>>(y.data(), img.height(), img.width());
}

Image bicubic_resize(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("bicubic_resize: target dimensions must be positive");
  const Eigen::MatrixXd ry = resample_weights(img.height(), out_h, Kernel::Bicubic);
  const Eigen::MatrixXd rx = resample_weights(img.width(), out_w, Kernel::Bicubic);
  Image::Pixels out(static_cast<Eigen::Index>(out_h) * out_w, 3);
  for (int c = 0; c < 3; ++c) {
    Eigen::Map<RowMajorX<double>>(out.col(c).data(), out_h, out_w).noalias() = ry * img.plane(c) * rx.transpose();
  }
  return Image::clamped(out_h, out_w, std::move(out));
}

void DegradationConfig::validate() const {
  if (scale < 1) throw std::invalid_argument("DegradationConfig: scale must be >= 1");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("DegradationConfig: noise_std must be >= 0");
}

Image degrade(const Image& hr, const DegradationConfig& cfg, RandomStream& rng) {
  cfg.validate();
  if (hr.height() % cfg.scale != 0 || hr.width() % cfg.scale != 0) {
    throw std::invalid_argument("degrade: " + std::to_string(hr.height()) + "x" + std::to_string(hr.width()) +
                                " is not divisible by scale " + std::to_string(cfg.scale));
  }
  Image lr = bicubic_resize(hr, hr.height() / cfg.scale, hr.width() / cfg.scale);
  if (cfg.noise_std == 0.0) return lr;
  Image::Pixels px = lr.pixels();
  for (Eigen::Index i = 0; i < px.size(); ++i) px.data()[i] += cfg.noise_std * rng.normal();
  return Image::clamped(lr.height(), lr.width(), std::move(px));
}

std::vector<PatchPair> extract_patch_pairs(const Image& hr, const DegradationConfig& cfg, int patch, int stride,
                                           RandomStream& rng) {
  cfg.validate();
  if (patch < 1 || patch % cfg.scale != 0) throw std::invalid_argument("extract_patch_pairs: patch must be a positive multiple of scale");
  if (stride < 1) throw std::invalid_argument("extract_patch_pairs: stride must be >= 1");
  std::vector<PatchPair> pairs;
  for (int y = 0; y + patch <= hr.height(); y += stride) {
    for (int x = 0; x + patch <= hr.width(); x += stride) {
      Image tile = hr.crop(y, x, patch, patch);
      Image lr = degrade(tile, cfg, rng);
      pairs.push_back({std::move(lr), std::move(tile), y, x});
    }
  }
  return pairs;
}

namespace {

struct PngFile {
  explicit PngFile(const std::filesystem::path& path, const char* mode) : fp(std::fopen(path.c_str(), mode)) {}
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
  PngFile(const PngFile&) = delete;
  PngFile& operator=(const PngFile&) = delete;
  std::FILE* fp;
};

}  // namespace

Image read_png(const std::filesystem::path& path) {
  PngFile file(path, "rb");
  if (!file.fp) throw std::runtime_error("read_png: cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw std::runtime_error("read_png: not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw std::runtime_error("read_png: libpng init failed");
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: corrupt PNG " + path.string());
  }
  png_init_io(png, file.fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Image::Pixels px(static_cast<Eigen::Index>(h) * w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) px(static_cast<Eigen::Index>(y) * w + x, c) = rows[y][3 * x + c] / 255.0;
    }
  }
  return Image(h, w, std::move(px));
}

void write_png(const std::filesystem::path& path, const Image& img) {
  PngFile file(path, "wb");
  if (!file.fp) throw std::runtime_error("write_png: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw std::runtime_error("write_png: libpng init failed");
  const int w = img.width(), h = img.height();
  std::vector<png_byte> buffer(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] = static_cast<png_byte>(std::lround(img.at(y, x, c) * 255.0));
      }
    }
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: failed writing " + path.string());
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) png_write_row(png, buffer.data() + static_cast<std::size_t>(y) * w * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path.string());
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::filesystem::path entry = line.substr(first, last - first + 1);
    if (entry.is_relative()) entry = path.parent_path() / entry;
    out.push_back(entry.lexically_normal());
  }
  return out;
}

}  // namespace refvae
