#include "retina/synth.hpp"

#include <cmath>

#include "retina/error.hpp"
#include "retina/rng.hpp"

namespace retina {

namespace {

void validate(const SynthConfig& c) {
    if (c.height < 32 || c.width < 32)
        fail(ErrorCode::parameter, "synthetic frames must be at least 32x32");
    if (c.num_frames < 1) fail(ErrorCode::parameter, "num_frames must be >= 1");
    if (c.background.base < 0.0 || c.background.base > 1.0)
        fail(ErrorCode::parameter, "background base must lie in [0,1]");
    if (c.background.noise_sigma < 0.0)
        fail(ErrorCode::parameter, "noise sigma must be >= 0");
    if (c.gt_half_width_sigmas <= 0.0)
        fail(ErrorCode::parameter, "gt_half_width_sigmas must be > 0");
    for (size_t k = 0; k < c.targets.size(); ++k) {
        const TargetSpec& t = c.targets[k];
        if (!(t.sigma > 0.0))
            fail(ErrorCode::parameter, "target " + std::to_string(k) + ": sigma must be > 0");
        if (!(t.amplitude > 0.0) || t.amplitude > 1.0)
            fail(ErrorCode::parameter, "target " + std::to_string(k) + ": amplitude must lie in (0,1]");
        for (int f = 0; f < c.num_frames; ++f) {
            const double cx = t.start_x + double(f) * t.vx;
            const double cy = t.start_y + double(f) * t.vy;
            if (cx < 0.0 || cx > double(c.width - 1) || cy < 0.0 || cy > double(c.height - 1))
                fail(ErrorCode::generation,
                     "target " + std::to_string(k) + " exits the frame at frame " +
                         std::to_string(f));
        }
    }
}

}  // namespace

SynthSequence generate(const SynthConfig& config) {
    validate(config);
    const int h = config.height;
    const int w = config.width;
    const BackgroundSpec& bg = config.background;
    const double two_pi = 6.283185307179586476925286766559;

    SynthSequence seq;
    seq.frames.reserve(size_t(config.num_frames));
    seq.boxes.reserve(size_t(config.num_frames));

    for (int f = 0; f < config.num_frames; ++f) {
        Grid frame(h, w);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double v = bg.base;
                if (bg.texture_amp != 0.0) {
                    const double px = (double(x) + bg.drift_vx * double(f)) / bg.texture_period;
                    const double py = (double(y) + bg.drift_vy * double(f)) / bg.texture_period;
                    v += bg.texture_amp * std::sin(two_pi * px) * std::sin(two_pi * py);
                }
                frame(y, x) = v;
            }
        }
        for (const TargetSpec& t : config.targets) {
            const double cx = t.start_x + double(f) * t.vx;
            const double cy = t.start_y + double(f) * t.vy;
            const double inv2s = 1.0 / (2.0 * t.sigma * t.sigma);
            // Blobs decay fast; only touch a window of +-4 sigma.
            const int x0 = std::max(0, int(std::floor(cx - 4.0 * t.sigma)));
            const int x1 = std::min(w - 1, int(std::ceil(cx + 4.0 * t.sigma)));
            const int y0 = std::max(0, int(std::floor(cy - 4.0 * t.sigma)));
            const int y1 = std::min(h - 1, int(std::ceil(cy + 4.0 * t.sigma)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = double(x) - cx;
                    const double dy = double(y) - cy;
                    frame(y, x) += t.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s);
                }
        }
        if (bg.noise_sigma > 0.0) {
            double* v = frame.data();
            const std::uint64_t frame_base = std::uint64_t(f) * std::uint64_t(h) * std::uint64_t(w);
            for (Eigen::Index i = 0; i < frame.size(); ++i)
                v[i] += bg.noise_sigma *
                        rng::keyed_gaussian(config.seed, frame_base + std::uint64_t(i));
        }
        {
            double* v = frame.data();
            for (Eigen::Index i = 0; i < frame.size(); ++i)
                v[i] = v[i] < 0.0 ? 0.0 : (v[i] > 1.0 ? 1.0 : v[i]);
        }
        seq.frames.push_back(std::move(frame));

        std::vector<GtBox> boxes;
        boxes.reserve(config.targets.size());
        for (const TargetSpec& t : config.targets) {
            const double cx = t.start_x + double(f) * t.vx;
            const double cy = t.start_y + double(f) * t.vy;
            const double half = config.gt_half_width_sigmas * t.sigma;
            GtBox box;
            box.x_min = std::max(0.0, cx - half);
            box.y_min = std::max(0.0, cy - half);
            box.x_max = std::min(double(w), cx + half);
            box.y_max = std::min(double(h), cy + half);
            boxes.push_back(box);
        }
        seq.boxes.push_back(std::move(boxes));
    }
    return seq;
}

SynthConfig moving_blob_preset(int num_frames, std::uint64_t seed) {
    SynthConfig config;
    config.height = 256;
    config.width = 256;
    config.num_frames = num_frames;
    config.seed = seed;
    config.background.base = 0.2;
    config.background.noise_sigma = 0.05;
    TargetSpec target;
    target.start_x = 40.0;
    target.start_y = 128.0;
    target.vx = 2.0;
    target.vy = 0.0;
    target.sigma = 2.0;
    target.amplitude = 0.6;
    config.targets.push_back(target);
    return config;
}

}  // namespace retina
