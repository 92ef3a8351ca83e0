#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "retina/rca.hpp"
#include "retina/rng.hpp"

using namespace retina;

namespace {

Grid random_frame(int h, int w, std::uint64_t seed) {
    Grid g(h, w);
    rng::Stream stream(seed);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = stream.next_unit();
    return g;
}

bool bitwise_equal(const Grid& a, const Grid& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(double) * size_t(a.size())) == 0;
}

}  // namespace

TEST_CASE("photoreceptor branches") {
    const RcaParams p = params_default();
    Grid frame(1, 3);
    frame << 0.0, 0.05, 0.5;
    const Grid out = photoreceptor_adapt(frame, p.theta_p, p.g_p);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 0.1 * 0.05);  // subthreshold attenuation, exact
    const double expected = 1.5 * std::tanh(0.5 - 0.1);
    CHECK(std::fabs(out(0, 2) - expected) <= 1e-15);
    CHECK(expected == doctest::Approx(0.569923).epsilon(1e-5));
    // Threshold itself stays on the linear branch (strict inequality).
    Grid boundary = Grid::Constant(1, 1, 0.1);
    CHECK(photoreceptor_adapt(boundary, p.theta_p, p.g_p)(0, 0) == 0.1 * 0.1);
}

TEST_CASE("horizontal inhibition: constant, zero, impulse") {
    const Kernel k_h = gaussian_kernel(3, 1.0);
    const Grid constant = Grid::Constant(6, 6, 0.9);
    const Grid inhibited = horizontal_inhibit(constant, k_h, 0.3);
    for (Eigen::Index i = 0; i < inhibited.size(); ++i)
        CHECK(inhibited.data()[i] == doctest::Approx(0.7 * 0.9).epsilon(1e-13));

    CHECK(horizontal_inhibit(Grid::Zero(5, 5), k_h, 0.3).abs().maxCoeff() == 0.0);

    Grid impulse = Grid::Zero(9, 9);
    impulse(4, 4) = 1.0;
    const Grid r = horizontal_inhibit(impulse, k_h, 0.3);
    const double center = 1.0 / (1.0 + 4.0 * std::exp(-0.5) + 4.0 * std::exp(-1.0));
    CHECK(r(4, 4) == doctest::Approx(1.0 - 0.3 * center).epsilon(1e-12));
    CHECK((1.0 - 0.3 * center) == doctest::Approx(0.938746).epsilon(1e-5));
    CHECK(r.minCoeff() >= 0.0);
}

TEST_CASE("bipolar ON/OFF channels") {
    const RcaParams p = params_default();
    Grid sh(1, 3);
    sh << 0.0, 0.5, 0.2;
    const BipolarResponse r = bipolar_onoff(sh, p.theta_b, p.g_b);
    CHECK(r.on(0, 0) == 0.0);
    CHECK(r.off(0, 0) == 0.0);
    CHECK(r.contrast(0, 0) == 0.0);
    CHECK(r.on(0, 1) == 0.6);  // 2*(0.5-0.2), exact in binary
    CHECK(r.off(0, 1) == 0.0);
    CHECK(r.contrast(0, 1) == 0.6);
    CHECK(r.on(0, 2) == 0.0);  // boundary: max(0, 0)
    CHECK(r.off(0, 2) == 0.0);
    CHECK(r.contrast(0, 2) == 0.0);
}

TEST_CASE("amacrine update: first frame, steady state, single change") {
    const RcaParams p = params_default();
    RcaState state;
    state_allocate(state, 4, 4);

    // First frame with constant contrast: zero gradient, zero memory.
    const Grid s_a1 = amacrine_update(Grid::Constant(4, 4, 0.3), state, p.alpha, p.beta);
    CHECK(s_a1.abs().maxCoeff() == 0.0);

    // t > 1 with unchanged contrast: pure memory decay.
    state.t = 1;
    state.s_prev_b = Grid::Constant(4, 4, 0.3);
    state.s_prev_a = Grid::Constant(4, 4, 0.5);
    const Grid s_a2 = amacrine_update(Grid::Constant(4, 4, 0.3), state, p.alpha, p.beta);
    for (Eigen::Index i = 0; i < s_a2.size(); ++i)
        CHECK(s_a2.data()[i] == doctest::Approx(0.8 * 0.5).epsilon(1e-15));

    // |dC| = 1 at one pixel with zero memory: (1-alpha)*beta.
    state.s_prev_a = Grid::Zero(4, 4);
    state.s_prev_b = Grid::Zero(4, 4);
    Grid c = Grid::Zero(4, 4);
    c(2, 2) = 1.0;
    Grid r_t;
    const Grid s_a3 = amacrine_update(c, state, p.alpha, p.beta, &r_t);
    CHECK(s_a3(2, 2) == doctest::Approx(0.24).epsilon(1e-14));
    CHECK(s_a3(0, 0) == 0.0);
    CHECK(r_t(2, 2) == doctest::Approx(1.2).epsilon(1e-15));

    // Dimension mismatch with stored memory.
    state.t = 3;
    CHECK_THROWS_AS(amacrine_update(Grid::Zero(5, 5), state, p.alpha, p.beta), Error);
}

TEST_CASE("magno integration: zeros, boundary, uniform offset") {
    const RcaParams p = params_default();
    const Kernel k_m = mexican_hat_kernel(p.dog_size_param, p.dog_sigma1, p.dog_sigma2,
                                          p.dog_w_surr);

    CHECK(magno_integrate(Grid::Zero(8, 8), Grid::Zero(8, 8), k_m, p).abs().maxCoeff() == 0.0);

    // Construct inputs with integrated map exactly zero: c = -gamma_a * a, so
    // M_s = 0 and the threshold argument is gamma_tau * a - theta_m.
    // gamma_tau * a = theta_m makes the argument exactly zero -> output 0.
    {
        const double a = p.theta_m / p.gamma_tau;
        const Grid s_a = Grid::Constant(8, 8, a);
        const Grid c_t = Grid::Constant(8, 8, -(p.gamma_a * a));
        MagnoIntermediates inter;
        const Grid s_m = magno_integrate(c_t, s_a, k_m, p, &inter);
        CHECK(inter.integrated.abs().maxCoeff() == 0.0);
        CHECK(inter.m_s.abs().maxCoeff() == 0.0);
        CHECK(s_m.abs().maxCoeff() <= 1e-15);
    }

    // gamma_tau * a = theta_m + 1: uniform g_m * tanh(1).
    {
        const double a = (p.theta_m + 1.0) / p.gamma_tau;
        const Grid s_a = Grid::Constant(8, 8, a);
        const Grid c_t = Grid::Constant(8, 8, -(p.gamma_a * a));
        const Grid s_m = magno_integrate(c_t, s_a, k_m, p);
        const double expected = 2.5 * std::tanh(1.0);
        for (Eigen::Index i = 0; i < s_m.size(); ++i)
            CHECK(std::fabs(s_m.data()[i] - expected) <= 1e-12);
        CHECK(expected == doctest::Approx(1.903986).epsilon(1e-5));
    }
}

TEST_CASE("enhance: guard, constant, max-normalization contract") {
    const RcaParams p = params_default();
    CHECK(enhance(Grid::Zero(6, 6), p).abs().maxCoeff() == 0.0);
    // Negative inputs rectify to zero before compression.
    CHECK(enhance(Grid::Constant(6, 6, -2.0), p).abs().maxCoeff() == 0.0);

    const Grid constant = enhance(Grid::Constant(6, 6, 0.7), p);
    for (Eigen::Index i = 0; i < constant.size(); ++i) CHECK(constant.data()[i] == 255.0);

    const Grid any = enhance(random_frame(12, 12, 3), p);
    CHECK(any.maxCoeff() == 255.0);
    CHECK(any.minCoeff() >= 0.0);
}

TEST_CASE("step: all-zero frames produce all-zero maps") {
    RcaEngine engine;
    for (int t = 0; t < 4; ++t) {
        const Grid map = engine.step(Grid::Zero(16, 16));
        CHECK(map.abs().maxCoeff() == 0.0);
    }
    CHECK(engine.state().t == 4);
}

TEST_CASE("step: identical frames follow the geometric memory decay") {
    RcaEngine engine;
    const Grid frame = random_frame(24, 24, 77);
    engine.step(frame);
    const Grid s_a1 = engine.state().s_a;
    engine.step(frame);
    const Grid s_a2 = engine.state().s_a;
    CHECK((s_a2 - 0.8 * s_a1).abs().maxCoeff() <= 1e-12);

    // Full decay invariant over 20 frames.
    RcaEngine fresh;
    fresh.step(frame);
    const Grid first = fresh.state().s_a;
    double factor = 1.0;
    for (int t = 2; t <= 20; ++t) {
        fresh.step(frame);
        factor *= 0.8;
        CHECK((fresh.state().s_a - factor * first).abs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("OFF channel is identically zero under default parameters") {
    const RcaParams p = params_default();
    const Kernel k_h = gaussian_kernel(p.kh_size, p.kh_sigma);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Grid frame = random_frame(12, 12, seed);
        const Grid s_p = photoreceptor_adapt(frame, p.theta_p, p.g_p);
        const Grid s_h = horizontal_inhibit(s_p, k_h, p.sigma_h);
        const BipolarResponse bip = bipolar_onoff(s_h, p.theta_b, p.g_b);
        CHECK(bip.off.maxCoeff() == 0.0);
    }
}

TEST_CASE("step output range and state non-negativity") {
    RcaEngine engine;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Grid map = engine.step(random_frame(16, 16, seed + 500));
        CHECK(map.minCoeff() >= 0.0);
        CHECK(map.maxCoeff() <= 255.0);
        const double peak = map.maxCoeff();
        CHECK((peak == 0.0 || peak == 255.0));
        CHECK(engine.state().s_h.minCoeff() >= 0.0);
        CHECK(engine.state().s_a.minCoeff() >= 0.0);
        CHECK(engine.state().s_m.minCoeff() >= 0.0);
        CHECK(engine.state().s_prev_b.minCoeff() >= 0.0);
        CHECK(engine.state().s_prev_a.minCoeff() >= 0.0);
        CHECK(grid_finite(map));
    }
}

TEST_CASE("process_sequence: reset semantics and causality") {
    RcaEngine engine;
    std::vector<Grid> frames;
    for (int t = 0; t < 6; ++t) frames.push_back(random_frame(20, 20, 900 + t));

    const auto maps1 = engine.process_sequence(frames);
    REQUIRE(maps1.size() == frames.size());
    const auto maps2 = engine.process_sequence(frames);
    for (size_t i = 0; i < maps1.size(); ++i) CHECK(bitwise_equal(maps1[i], maps2[i]));

    // Prefix property: truncating the sequence leaves earlier maps unchanged.
    const std::vector<Grid> prefix(frames.begin(), frames.begin() + 3);
    const auto maps3 = engine.process_sequence(prefix);
    for (size_t i = 0; i < maps3.size(); ++i) CHECK(bitwise_equal(maps3[i], maps1[i]));

    // Reset after one step equals a fresh engine.
    engine.step(frames[0]);
    engine.reset();
    const Grid after_reset = engine.step(frames[1]);
    RcaEngine fresh;
    const Grid fresh_map = fresh.step(frames[1]);
    CHECK(bitwise_equal(after_reset, fresh_map));
}

TEST_CASE("process_sequence: splitting a sequence breaks temporal memory") {
    // A moving blob gives the memory something to accumulate.
    auto blob_frame = [](int t) {
        Grid g = Grid::Constant(32, 32, 0.1);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                const double dx = x - (6.0 + 2.0 * t);
                const double dy = y - 16.0;
                g(y, x) += 0.7 * std::exp(-(dx * dx + dy * dy) / 8.0);
            }
        return g;
    };
    std::vector<Grid> frames;
    for (int t = 0; t < 10; ++t) frames.push_back(blob_frame(t));

    RcaEngine engine;
    const auto whole = engine.process_sequence(frames);
    const std::vector<Grid> first_half(frames.begin(), frames.begin() + 5);
    const std::vector<Grid> second_half(frames.begin() + 5, frames.end());
    engine.process_sequence(first_half);
    const auto split_tail = engine.process_sequence(second_half);

    bool any_difference = false;
    for (size_t i = 0; i < split_tail.size(); ++i)
        if (!bitwise_equal(split_tail[i], whole[5 + i])) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("step errors: empty sequence, dimension change, non-finite input") {
    RcaEngine engine;
    CHECK_THROWS_AS(engine.process_sequence({}), Error);
    engine.step(Grid::Zero(8, 8));
    CHECK_THROWS_AS(engine.step(Grid::Zero(9, 8)), Error);
    try {
        engine.step(Grid::Zero(9, 8));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::sequence);
    }
    Grid bad = Grid::Zero(8, 8);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(engine.step(bad), Error);
}

TEST_CASE("trace capture does not perturb outputs") {
    const Grid frame_a = random_frame(16, 16, 41);
    const Grid frame_b = random_frame(16, 16, 42);

    RcaEngine plain(params_default(), false);
    RcaEngine traced(params_default(), true);
    const Grid m1 = plain.step(frame_a);
    const Grid m2 = traced.step(frame_a);
    CHECK(bitwise_equal(m1, m2));
    CHECK(!plain.last_trace().has_value());
    REQUIRE(traced.last_trace().has_value());

    const Grid n1 = plain.step(frame_b);
    const Grid n2 = traced.step(frame_b);
    CHECK(bitwise_equal(n1, n2));

    // The trace is layer-consistent: recomputing bipolar from the captured
    // s_h reproduces the captured contrast map.
    const LayerTrace& trace = *traced.last_trace();
    const RcaParams p = params_default();
    const BipolarResponse bip = bipolar_onoff(trace.s_h, p.theta_b, p.g_b);
    CHECK(bitwise_equal(bip.contrast, trace.c_t));
    CHECK(bitwise_equal(trace.motion, n2));
    CHECK(same_dims(trace.s_p, frame_b));
    CHECK(same_dims(trace.m_s, frame_b));
}

TEST_CASE("fuzz: state stays finite under random sequences") {
    RcaEngine engine;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Grid map = engine.step(random_frame(10, 14, 7000 + seed));
        CHECK(grid_finite(map));
        CHECK(grid_finite(engine.state().s_a));
        CHECK(grid_finite(engine.state().s_m));
    }
}

#include "reference_rca.hpp"

TEST_CASE("engine matches the straight-line reference on a small sequence") {
    std::vector<Grid> frames;
    for (int t = 0; t < 4; ++t) {
        Grid f = random_frame(16, 20, 3000 + t);
        // Give the frames temporal structure: a bright patch drifting right.
        for (int y = 6; y < 10; ++y)
            for (int x = 2 + 2 * t; x < 6 + 2 * t; ++x) f(y, x) = 0.9;
        frames.push_back(f);
    }
    RcaEngine engine;
    const auto maps = engine.process_sequence(frames);

    std::vector<reference_rca::Image> ref_frames;
    for (const Grid& f : frames) {
        reference_rca::Image img(int(f.rows()), int(f.cols()));
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) img.at(y, x) = f(y, x);
        ref_frames.push_back(img);
    }
    const auto ref_maps = reference_rca::run(ref_frames);
    REQUIRE(maps.size() == ref_maps.size());
    for (size_t i = 0; i < maps.size(); ++i)
        CHECK(std::memcmp(maps[i].data(), ref_maps[i].v.data(),
                          sizeof(double) * ref_maps[i].v.size()) == 0);
}
