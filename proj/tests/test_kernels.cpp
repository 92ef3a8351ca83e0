#include <doctest.h>

#include <cmath>

#include "retina/kernels.hpp"
#include "retina/rng.hpp"

using namespace retina;

namespace {

Grid random_grid(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Grid g(h, w);
    rng::Stream stream(seed);
    for (Eigen::Index i = 0; i < g.size(); ++i)
        g.data()[i] = lo + (hi - lo) * stream.next_unit();
    return g;
}

// Dense correlation oracle with replicate borders; written independently of
// the library loop structure.
Grid conv_oracle(const Grid& in, const Grid& weights) {
    const int r = int(weights.rows()) / 2;
    Grid out(in.rows(), in.cols());
    for (Eigen::Index y = 0; y < in.rows(); ++y)
        for (Eigen::Index x = 0; x < in.cols(); ++x) {
            double acc = 0.0;
            for (int ky = -r; ky <= r; ++ky)
                for (int kx = -r; kx <= r; ++kx) {
                    Eigen::Index iy = y + ky;
                    Eigen::Index ix = x + kx;
                    iy = iy < 0 ? 0 : (iy >= in.rows() ? in.rows() - 1 : iy);
                    ix = ix < 0 ? 0 : (ix >= in.cols() ? in.cols() - 1 : ix);
                    acc += weights(ky + r, kx + r) * in(iy, ix);
                }
            out(y, x) = acc;
        }
    return out;
}

// Brute-force bilateral oracle: double loop, straight from the formula.
Grid bilateral_oracle(const Grid& in, int d, double sc, double ss) {
    const int r = d / 2;
    const double inv2c = 1.0 / (2.0 * sc * sc);
    const double inv2s = 1.0 / (2.0 * ss * ss);
    Grid out(in.rows(), in.cols());
    for (Eigen::Index y = 0; y < in.rows(); ++y)
        for (Eigen::Index x = 0; x < in.cols(); ++x) {
            const double center = in(y, x);
            double num = 0.0, den = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    Eigen::Index iy = y + dy;
                    Eigen::Index ix = x + dx;
                    iy = iy < 0 ? 0 : (iy >= in.rows() ? in.rows() - 1 : iy);
                    ix = ix < 0 ? 0 : (ix >= in.cols() ? in.cols() - 1 : ix);
                    const double v = in(iy, ix);
                    const double spatial = std::exp(-double(dx * dx + dy * dy) * inv2s);
                    const double diff = v - center;
                    const double color = std::exp(-(diff * diff) * inv2c);
                    const double w = spatial * color;
                    num += w * v;
                    den += w;
                }
            out(y, x) = num / den;
        }
    return out;
}

}  // namespace

TEST_CASE("gaussian kernel: normalization and closed-form center weight") {
    const Kernel k = gaussian_kernel(3, 1.0);
    CHECK(k.norm == Kernel::Norm::sum_one);
    CHECK(std::fabs(k.weights.sum() - 1.0) <= 1e-12);
    // Center weight of the 3x3 sigma=1 kernel: 1 / (1 + 4 e^{-1/2} + 4 e^{-1}).
    const double center = 1.0 / (1.0 + 4.0 * std::exp(-0.5) + 4.0 * std::exp(-1.0));
    CHECK(std::fabs(k.weights(1, 1) - center) <= 1e-12);
    CHECK(center == doctest::Approx(0.204180).epsilon(1e-5));

    const Kernel single = gaussian_kernel(1, 1.0);
    CHECK(single.weights(0, 0) == 1.0);

    CHECK_THROWS_AS(gaussian_kernel(4, 1.0), Error);
    CHECK_THROWS_AS(gaussian_kernel(3, 0.0), Error);
}

TEST_CASE("gaussian kernel construction is deterministic") {
    const Kernel a = gaussian_kernel(5, 1.3);
    const Kernel b = gaussian_kernel(5, 1.3);
    CHECK((a.weights == b.weights).all());
}

TEST_CASE("mexican-hat kernel: support, raw values, L1 normalization") {
    const Grid raw = mexican_hat_raw(4, 1.0, 2.0, 0.5);
    REQUIRE(raw.rows() == 5);
    REQUIRE(raw.cols() == 5);
    CHECK(raw(2, 2) == 0.5);  // exp(0) - 0.5 exp(0), exact
    // Offset (2, 0): e^{-2} - 0.5 e^{-0.5}.
    const double expected = std::exp(-2.0) - 0.5 * std::exp(-0.5);
    CHECK(raw(2, 4) == expected);
    CHECK(expected == doctest::Approx(-0.167930).epsilon(1e-5));

    const Kernel k = mexican_hat_kernel(4, 1.0, 2.0, 0.5);
    CHECK(k.norm == Kernel::Norm::l1_one);
    REQUIRE(k.size() == 5);
    CHECK(std::fabs(k.weights.abs().sum() - 1.0) <= 1e-12);

    // Odd size parameters round the radius up, keeping odd support.
    CHECK(mexican_hat_kernel(1, 1.0, 2.0, 0.5).size() == 3);
    CHECK(mexican_hat_kernel(2, 1.0, 2.0, 0.5).size() == 3);
    CHECK(mexican_hat_kernel(3, 1.0, 2.0, 0.5).size() == 5);

    CHECK_THROWS_AS(mexican_hat_kernel(4, 0.0, 2.0, 0.5), Error);
    CHECK_THROWS_AS(mexican_hat_kernel(4, 1.0, -1.0, 0.5), Error);
}

TEST_CASE("convolve: constant and zero grids") {
    const Kernel k = gaussian_kernel(3, 1.0);
    const Grid constant = Grid::Constant(7, 9, 0.37);
    const Grid conv = convolve(constant, k);
    for (Eigen::Index i = 0; i < conv.size(); ++i)
        CHECK(conv.data()[i] == doctest::Approx(0.37).epsilon(1e-14));

    const Grid zeros = Grid::Zero(5, 5);
    CHECK(convolve(zeros, mexican_hat_kernel(4, 1.0, 2.0, 0.5)).abs().maxCoeff() == 0.0);
}

TEST_CASE("convolve: impulse stamps the kernel") {
    const Kernel k = gaussian_kernel(3, 1.0);
    Grid impulse = Grid::Zero(9, 9);
    impulse(4, 4) = 1.0;
    const Grid r = convolve(impulse, k);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            CHECK(r(4 + dy, 4 + dx) == doctest::Approx(k.weights(1 + dy, 1 + dx)).epsilon(1e-15));
    CHECK(r(0, 0) == 0.0);
    CHECK(r(4, 6) == 0.0);
}

TEST_CASE("convolve matches the dense oracle, including kernels larger than the grid") {
    const Kernel k = mexican_hat_kernel(4, 1.0, 2.0, 0.5);
    const Grid g = random_grid(11, 7, 42);
    const Grid a = convolve(g, k);
    const Grid b = conv_oracle(g, k.weights);
    CHECK((a - b).abs().maxCoeff() == 0.0);  // same arithmetic order: bitwise

    const Grid tiny = random_grid(3, 2, 43);
    const Grid at = convolve(tiny, k);
    const Grid bt = conv_oracle(tiny, k.weights);
    CHECK((at - bt).abs().maxCoeff() == 0.0);
}

TEST_CASE("convolve uses correlation orientation (no kernel flip)") {
    Kernel asym;
    asym.weights = Grid::Zero(3, 3);
    asym.weights(0, 2) = 1.0;  // weight at offset (dy=-1, dx=+1)
    Grid impulse = Grid::Zero(5, 5);
    impulse(2, 2) = 1.0;
    const Grid r = convolve(impulse, asym);
    // Correlation: out(y,x) = sum_k w(k) in(y+ky, x+kx); the response to an
    // impulse lands at the mirrored offset (dy=+1, dx=-1).
    CHECK(r(3, 1) == 1.0);
    CHECK(r(1, 3) == 0.0);
}

TEST_CASE("convolve is linear") {
    const Kernel k = gaussian_kernel(3, 1.0);
    const Grid x = random_grid(8, 8, 1);
    const Grid y = random_grid(8, 8, 2);
    const double a = 1.7, b = -0.4;
    const Grid lhs = convolve((a * x + b * y).eval(), k);
    const Grid rhs = a * convolve(x, k) + b * convolve(y, k);
    CHECK((lhs - rhs).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("sum-normalized non-negative kernels preserve the value range") {
    const Kernel k = gaussian_kernel(3, 1.0);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Grid g = random_grid(10, 12, seed, -1.0, 2.0);
        const Grid r = convolve(g, k);
        CHECK(r.maxCoeff() <= g.maxCoeff() + 1e-12);
        CHECK(r.minCoeff() >= g.minCoeff() - 1e-12);
    }
}

TEST_CASE("sobel: constant input, ramp, impulse, shift invariance") {
    CHECK(sobel_gradient_magnitude(Grid::Constant(6, 6, 0.8)).maxCoeff() == 0.0);  // exact cancellation

    // Horizontal ramp I(row, col) = col * delta: interior response is 8*delta.
    const double delta = 0.05;
    Grid ramp(7, 9);
    for (Eigen::Index r = 0; r < ramp.rows(); ++r)
        for (Eigen::Index c = 0; c < ramp.cols(); ++c) ramp(r, c) = double(c) * delta;
    const Grid mag = sobel_gradient_magnitude(ramp);
    for (Eigen::Index r = 1; r < ramp.rows() - 1; ++r)
        for (Eigen::Index c = 1; c < ramp.cols() - 1; ++c)
            CHECK(mag(r, c) == doctest::Approx(8.0 * delta).epsilon(1e-12));

    Grid impulse = Grid::Zero(9, 9);
    impulse(4, 4) = 1.0;
    const Grid im = sobel_gradient_magnitude(impulse);
    CHECK(im.minCoeff() >= 0.0);
    // Symmetric response pattern.
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
            CHECK(im(4 + dy, 4 + dx) == doctest::Approx(im(4 - dy, 4 - dx)).epsilon(1e-14));

    // Adding a constant leaves the gradient magnitude unchanged.
    const Grid g = random_grid(8, 8, 11);
    const Grid shifted = g + 3.25;
    CHECK((sobel_gradient_magnitude(g) - sobel_gradient_magnitude(shifted)).abs().maxCoeff() <=
          1e-12);
}

TEST_CASE("sobel response matches a dense correlation oracle") {
    Grid gx(3, 3), gy(3, 3);
    gx << -1, 0, 1, -2, 0, 2, -1, 0, 1;
    gy << -1, -2, -1, 0, 0, 0, 1, 2, 1;
    const Grid g = random_grid(10, 10, 5);
    const Grid ox = conv_oracle(g, gx);
    const Grid oy = conv_oracle(g, gy);
    const Grid expected = (ox.square() + oy.square()).sqrt();
    CHECK((sobel_gradient_magnitude(g) - expected).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("bilateral: constant and zero grids are fixed points") {
    const Grid constant = Grid::Constant(6, 6, 0.42);
    const Grid r = bilateral_filter(constant, 5, 0.1, 0.1);
    for (Eigen::Index i = 0; i < r.size(); ++i)
        CHECK(r.data()[i] == doctest::Approx(0.42).epsilon(1e-14));
    CHECK(bilateral_filter(Grid::Zero(8, 8), 5, 0.1, 0.1).abs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(bilateral_filter(constant, 4, 0.1, 0.1), Error);
    CHECK_THROWS_AS(bilateral_filter(constant, 5, 0.0, 0.1), Error);
}

TEST_CASE("bilateral matches the dense double-loop oracle") {
    const Grid g = random_grid(8, 8, 99);
    const Grid a = bilateral_filter(g, 5, 0.1, 0.1);
    const Grid b = bilateral_oracle(g, 5, 0.1, 0.1);
    CHECK((a - b).abs().maxCoeff() <= 1e-10);

    // Wider sigmas exercise meaningful cross-pixel weights.
    const Grid a2 = bilateral_filter(g, 5, 0.5, 2.0);
    const Grid b2 = bilateral_oracle(g, 5, 0.5, 2.0);
    CHECK((a2 - b2).abs().maxCoeff() <= 1e-10);

    // Larger grid: exercises the interior plane-sharing path, which must be
    // bitwise identical to the direct formula.
    const Grid big = random_grid(17, 13, 123);
    const Grid a3 = bilateral_filter(big, 5, 0.3, 1.0);
    const Grid b3 = bilateral_oracle(big, 5, 0.3, 1.0);
    CHECK((a3 - b3).abs().maxCoeff() == 0.0);
}

TEST_CASE("bilateral output is a convex combination of the neighborhood") {
    const Grid g = random_grid(12, 9, 7, -2.0, 2.0);
    const int d = 5, r = d / 2;
    const Grid out = bilateral_filter(g, d, 0.4, 1.5);
    for (Eigen::Index y = 0; y < g.rows(); ++y)
        for (Eigen::Index x = 0; x < g.cols(); ++x) {
            double lo = g(y, x), hi = g(y, x);
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    Eigen::Index iy = y + dy, ix = x + dx;
                    iy = iy < 0 ? 0 : (iy >= g.rows() ? g.rows() - 1 : iy);
                    ix = ix < 0 ? 0 : (ix >= g.cols() ? g.cols() - 1 : ix);
                    lo = std::min(lo, g(iy, ix));
                    hi = std::max(hi, g(iy, ix));
                }
            CHECK(out(y, x) >= lo - 1e-12);
            CHECK(out(y, x) <= hi + 1e-12);
        }
}
