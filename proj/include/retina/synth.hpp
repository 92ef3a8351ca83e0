#pragma once

#include <cstdint>
#include <vector>

#include "retina/grid.hpp"

namespace retina {

// One small moving target: a Gaussian blob on a straight-line trajectory.
struct TargetSpec {
    double start_x = 0.0;  // px, frame 0 center
    double start_y = 0.0;
    double vx = 0.0;  // px/frame
    double vy = 0.0;
    double sigma = 2.0;      // blob radius, px
    double amplitude = 0.5;  // peak intensity added to the background, (0,1]
};

struct BackgroundSpec {
    double base = 0.2;          // flat level in [0,1]
    double drift_vx = 0.0;      // px/frame motion of the texture
    double drift_vy = 0.0;
    double noise_sigma = 0.0;   // i.i.d. Gaussian noise per pixel per frame
    double texture_amp = 0.0;   // amplitude of the smooth drifting texture
    double texture_period = 64.0;  // px wavelength of the texture
};

struct SynthConfig {
    int height = 256;
    int width = 256;
    int num_frames = 1;
    std::uint64_t seed = 0;
    std::vector<TargetSpec> targets;
    BackgroundSpec background;
    // Ground-truth half-width in units of sigma; 2 covers ~95% of blob energy.
    double gt_half_width_sigmas = 2.0;
};

struct GtBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

struct SynthSequence {
    std::vector<Grid> frames;               // values clamped to [0,1]
    std::vector<std::vector<GtBox>> boxes;  // one list per frame, one box per target
};

// Deterministic in the seed: frame t (zero-based) is
//   clamp(background(t) + sum_targets amplitude * exp(-((x-cx_t)^2+(y-cy_t)^2)/(2 sigma^2))
//         + noise, 0, 1),
// with cx_t = start_x + t*vx. Noise is keyed by (seed, frame, pixel), so
// changing the seed changes noise but never target centers or boxes. A target
// whose center leaves the frame is a generation error.
SynthSequence generate(const SynthConfig& config);

// The scenario used by the deterministic acceptance runs: one 256x256 blob
// (sigma 2, amplitude 0.6) moving at 2 px/frame over a flat noisy background
// (base 0.2, noise sigma 0.05).
SynthConfig moving_blob_preset(int num_frames, std::uint64_t seed);

}  // namespace retina
