#pragma once

#include <Eigen/Dense>

namespace refvae {

/// Interpolation kernels used for separable resampling.
enum class Kernel {
  Bicubic,   ///< Catmull-Rom family, a = -0.5, antialiased when shrinking
  Bilinear,  ///< triangle kernel, half-pixel centers, no antialias
};

/// Row-stochastic (out × in) matrix mapping a 1-D signal of length `in` to
/// length `out`. Taps falling outside the signal are dropped and the row is
/// renormalized, so each row sums to one.
Eigen::MatrixXd resample_weights(int in, int out, Kernel kernel);

/// The a = -0.5 cubic convolution kernel.
double cubic_kernel(double x);

}  // namespace refvae
