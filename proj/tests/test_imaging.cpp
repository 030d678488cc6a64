#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace refvae;

namespace {

double max_abs_diff(const Image& a, const Image& b) {
  return (a.pixels() - b.pixels()).cwiseAbs().maxCoeff();
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

}  // namespace

TEST_CASE("BT.601 luma of black, white and a mixed pixel") {
  CHECK(rgb_to_ycbcr(Image::constant(1, 1, 0.0)).at(0, 0, 0) == doctest::Approx(16.0 / 255.0).epsilon(1e-9));
  CHECK(rgb_to_ycbcr(Image::constant(1, 1, 1.0)).at(0, 0, 0) == doctest::Approx(235.0 / 255.0).epsilon(1e-9));

  Image px(1, 1);
  px.set(0, 0, 0, 0.5);
  px.set(0, 0, 1, 0.25);
  px.set(0, 0, 2, 0.75);
  const double y = 16.0 + 65.481 * 0.5 + 128.553 * 0.25 + 24.966 * 0.75;
  const double cb = 128.0 - 37.797 * 0.5 - 74.203 * 0.25 + 112.0 * 0.75;
  const double cr = 128.0 + 112.0 * 0.5 - 93.786 * 0.25 - 18.214 * 0.75;
  const Image ycc = rgb_to_ycbcr(px);
  CHECK(ycc.at(0, 0, 0) * 255.0 == doctest::Approx(y).epsilon(1e-9));
  CHECK(ycc.at(0, 0, 1) * 255.0 == doctest::Approx(cb).epsilon(1e-9));
  CHECK(ycc.at(0, 0, 2) * 255.0 == doctest::Approx(cr).epsilon(1e-9));
  CHECK(luma_255(px)(0, 0) == doctest::Approx(y).epsilon(1e-9));
}

TEST_CASE("RGB -> YCbCr -> RGB roundtrip stays within one 8-bit level") {
  RandomStream rng(1);
  const Image img = uniform_image(25, 40, rng);
  CHECK(max_abs_diff(ycbcr_to_rgb(rgb_to_ycbcr(img)), img) < 1.0 / 255.0);
}

TEST_CASE("bicubic resize keeps constants and produces the requested size") {
  const Image c = Image::constant(64, 48, 0.3);
  const Image up = bicubic_resize(c, 100, 77);
  CHECK(up.height() == 100);
  CHECK(up.width() == 77);
  CHECK((up.pixels().array() - 0.3).abs().maxCoeff() <= 1e-12);

  const Image down = bicubic_resize(fixtures::desk_image(0, 256, 256), 32, 32);
  CHECK(down.height() == 32);
  CHECK(down.width() == 32);
}

TEST_CASE("bicubic up then down is near-identity on a smooth image") {
  Image smooth(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      smooth.set(y, x, 0, 0.2 + 0.02 * x);
      smooth.set(y, x, 1, 0.5 + 0.3 * std::sin(0.15 * y));
      smooth.set(y, x, 2, 0.4 + 0.01 * (x + y));
    }
  }
  const Image round = bicubic_resize(bicubic_resize(smooth, 128, 128), 32, 32);
  CHECK((round.pixels() - smooth.pixels()).cwiseAbs().mean() <= 2.0 / 255.0);
}

TEST_CASE("degrade without noise is exactly the bicubic shrink") {
  const Image hr = fixtures::desk_image(1, 256, 256);
  RandomStream rng(2);
  const Image lr = degrade(hr, {8, 0.0}, rng);
  CHECK(lr.height() == 32);
  CHECK(lr.width() == 32);
  CHECK(lr == bicubic_resize(hr, 32, 32));
}

TEST_CASE("degrade noise has the configured standard deviation") {
  const Image hr = Image::constant(512, 512, 0.5);
  RandomStream rng(3);
  const double sd = 0.05;
  const Image lr = degrade(hr, {8, sd}, rng);
  const Eigen::ArrayXd d = (lr.pixels().array() - 0.5).reshaped();
  const double mean = d.mean();
  const double sample_sd = std::sqrt((d - mean).square().sum() / static_cast<double>(d.size() - 1));
  CHECK(std::abs(mean) < 0.01);
  CHECK(sample_sd == doctest::Approx(sd).epsilon(0.1));
}

TEST_CASE("degrade is deterministic for a fixed stream") {
  const Image hr = fixtures::desk_image(2, 64, 64);
  RandomStream a(4), b(4);
  CHECK(degrade(hr, {4, 0.02}, a) == degrade(hr, {4, 0.02}, b));
}

TEST_CASE("degrade rejects dimensions not divisible by the scale") {
  RandomStream rng(5);
  CHECK_THROWS_AS(degrade(Image::constant(100, 96, 0.5), {8, 0.0}, rng), std::invalid_argument);
  CHECK_THROWS_AS(degrade(Image::constant(96, 96, 0.5), {0, 0.0}, rng), std::invalid_argument);
  CHECK_THROWS_AS(degrade(Image::constant(96, 96, 0.5), {8, -0.1}, rng), std::invalid_argument);
}

TEST_CASE("patch pairs tile the image and each pair matches degrade") {
  const Image hr256 = fixtures::desk_image(0, 256, 256);
  RandomStream rng(6);
  CHECK(extract_patch_pairs(hr256, {8, 0.0}, 256, 256, rng).size() == 1);

  const Image hr = fixtures::desk_image(3, 512, 512);
  for (double noise : {0.0, 0.03}) {
    CAPTURE(noise);
    RandomStream tiles(7), replay(7);
    const auto pairs = extract_patch_pairs(hr, {8, noise}, 256, 128, tiles);
    REQUIRE(pairs.size() == 9);
    for (const auto& p : pairs) {
      CAPTURE(p.y);
      CAPTURE(p.x);
      CHECK(p.hr == hr.crop(p.y, p.x, 256, 256));
      CHECK(p.lr.height() == 32);
      CHECK(p.lr == degrade(p.hr, {8, noise}, replay));
    }
  }
  CHECK(extract_patch_pairs(Image::constant(100, 100, 0.5), {8, 0.0}, 256, 128, rng).empty());
}

TEST_CASE("PNG roundtrip quantises to 8 bits") {
  const auto dir = fixtures::scratch("png");
  RandomStream rng(8);
  const Image img = uniform_image(13, 21, rng);
  write_png(dir / "a.png", img);
  const Image back = read_png(dir / "a.png");
  REQUIRE(back.height() == 13);
  REQUIRE(back.width() == 21);
  CHECK(max_abs_diff(back, img) <= 0.5 / 255.0 + 1e-12);
  write_png(dir / "b.png", back);
  CHECK(read_png(dir / "b.png") == back);
  CHECK_THROWS(read_png(dir / "missing.png"));
}

TEST_CASE("manifest parsing skips blanks and comments and resolves relative paths") {
  const auto dir = fixtures::scratch("manifest");
  {
    std::ofstream out(dir / "list.txt");
    out << "# images\n\n  a.png  \nsub/b.png\n/abs/c.png\n";
  }
  const auto paths = read_manifest(dir / "list.txt");
  REQUIRE(paths.size() == 3);
  CHECK(paths[0] == (dir / "a.png").lexically_normal());
  CHECK(paths[1] == (dir / "sub/b.png").lexically_normal());
  CHECK(paths[2] == std::filesystem::path("/abs/c.png"));
  CHECK_THROWS(read_manifest(dir / "nope.txt"));
}
