#pragma once

#include "retina/grid.hpp"

namespace retina {

// Small fixed convolution kernel with odd square support.
struct Kernel {
    enum class Norm { none, sum_one, l1_one };

    Grid weights;  // size x size
    Norm norm = Norm::none;

    int size() const noexcept { return static_cast<int>(weights.rows()); }
    int radius() const noexcept { return size() / 2; }
};

// Gaussian low-pass kernel, weights proportional to exp(-(x^2+y^2)/(2 sigma^2))
// on integer offsets, normalized so the element sum is 1.
Kernel gaussian_kernel(int size, double sigma);

// Unnormalized difference-of-Gaussians weights:
//   exp(-(x^2+y^2)/(2 sigma1^2)) - w_surr * exp(-(x^2+y^2)/(2 sigma2^2)).
// size_param follows the convention that an even value p yields (p+1)x(p+1)
// support, i.e. offsets in [-p/2, p/2]; odd values round the radius up.
Grid mexican_hat_raw(int size_param, double sigma1, double sigma2, double w_surr);

// The center-surround kernel used by the magnocellular layer: the raw DoG
// weights L1-normalized (sum of absolute values = 1).
Kernel mexican_hat_kernel(int size_param, double sigma1, double sigma2, double w_surr);

// Same-size 2D convolution in correlation orientation (no kernel flip) with
// replicate (clamp-to-edge) borders. All toolkit kernels are symmetric, so the
// orientation is unobservable for them; it is fixed for bit-exactness.
Grid convolve(const GridView& input, const Kernel& kernel);

// Per-pixel sqrt(gx^2 + gy^2) with the standard unscaled 3x3 Sobel responses
// and replicate borders.
Grid sobel_gradient_magnitude(const GridView& input);

// Classical bilateral filter over the d x d neighborhood (replicate borders,
// q = p included):
//   out(p) = sum_q w(p,q) in(q) / sum_q w(p,q),
//   w(p,q) = exp(-|p-q|^2/(2 sigma_space^2)) * exp(-(in(p)-in(q))^2/(2 sigma_color^2)).
// Spatial distance is measured in pixels.
Grid bilateral_filter(const GridView& input, int d, double sigma_color, double sigma_space);

}  // namespace retina
