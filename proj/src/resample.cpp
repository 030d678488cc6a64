#include "refvae/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refvae {

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

namespace {

Eigen::MatrixXd bicubic_weights(int in, int out) {
  const double scale = static_cast<double>(in) / out;
  const double fscale = std::max(scale, 1.0);
  const double support = 2.0 * fscale;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out, in);
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * scale;
    const int lo = std::max(0, static_cast<int>(std::floor(center - support)));
    const int hi = std::min(in, static_cast<int>(std::ceil(center + support)) + 1);
    double total = 0.0;
    for (int j = lo; j < hi; ++j) {
      const double v = cubic_kernel((j + 0.5 - center) / fscale);
      w(i, j) = v;
      total += v;
    }
    w.row(i) /= total;
  }
  return w;
}

Eigen::MatrixXd bilinear_weights(int in, int out) {
  const double scale = static_cast<double>(in) / out;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out, in);
  for (int i = 0; i < out; ++i) {
    const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int j0 = static_cast<int>(std::floor(src));
    const int j1 = std::min(j0 + 1, in - 1);
    const double t = src - j0;
    w(i, j0) += 1.0 - t;
    w(i, j1) += t;
  }
  return w;
}

}  // namespace

Eigen::MatrixXd resample_weights(int in, int out, Kernel kernel) {
  if (in < 1 || out < 1) throw std::invalid_argument("resample_weights: sizes must be positive");
  if (in == out) return Eigen::MatrixXd::Identity(out, in);
  return kernel == Kernel::Bicubic ? bicubic_weights(in, out) : bilinear_weights(in, out);
}

}  // namespace refvae
