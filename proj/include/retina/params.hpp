#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace retina {

// Scalar constants of the five-layer automaton. Defaults reproduce the
// published operating point; every field can be overridden through the
// key=value config format (keys named exactly like the fields).
struct RcaParams {
    // Layer 1: photoreceptors. Subthreshold values are attenuated by a fixed
    // factor of 0.1 (not configurable; part of the piecewise nonlinearity).
    double theta_p = 0.1;
    double g_p = 1.5;

    // Layer 2: horizontal cells (Gaussian pooling + lateral inhibition).
    int kh_size = 3;
    double kh_sigma = 1.0;
    double sigma_h = 0.3;

    // Layer 3: bipolar ON/OFF channels.
    double theta_b = 0.2;
    double g_b = 2.0;

    // Layer 4: amacrine temporal extraction.
    double alpha = 0.8;
    double beta = 1.2;

    // Layer 5: magnocellular integration.
    double gamma_a = 0.5;
    double gamma_tau = 0.7;
    double g_m = 2.5;
    double theta_m = 0.3;

    // Output blend and enhancement.
    double eta_m = 0.7;
    double gamma_p = 0.8;

    // Mexican-hat (difference-of-Gaussians) kernel. size_param 4 yields a
    // 5x5 support (offsets in [-2, 2]).
    int dog_size_param = 4;
    double dog_sigma1 = 1.0;
    double dog_sigma2 = 2.0;
    double dog_w_surr = 0.5;

    // Bilateral filter inside Enhance. sigma_space is measured in pixels; the
    // published 0.1 px makes spatial weighting nearly a delta at the neighbors
    // and is implemented literally (override via config if undesired).
    int bilateral_d = 5;
    double bilateral_sigma_color = 0.1;
    double bilateral_sigma_space = 0.1;
};

inline RcaParams params_default() { return RcaParams{}; }

// Throws parameter error if any invariant is violated (alpha in [0,1),
// eta_m in [0,1], gains and sigmas strictly positive, odd kernel sizes...).
void params_validate(const RcaParams& p);

// Applies key=value overrides from a config stream/file on top of `base`.
// UTF-8 text, one key=value per line, '#' comments; unknown keys are an error.
RcaParams params_from_stream(std::istream& in, RcaParams base, const std::string& origin);
RcaParams params_from_file(const std::filesystem::path& path, RcaParams base = RcaParams{});

// Full-precision snapshot in the same config format; params_from_stream on the
// result reproduces the struct exactly.
std::string params_to_config(const RcaParams& p);

}  // namespace retina
