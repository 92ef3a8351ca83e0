#include "retina/rca.hpp"

#include <cmath>

namespace retina {

Grid photoreceptor_adapt(const GridView& frame, double theta_p, double g_p) {
    Grid out(frame.rows(), frame.cols());
    const double* in = frame.data();
    double* o = out.data();
    const Eigen::Index n = frame.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = in[i];
        o[i] = v > theta_p ? g_p * std::tanh(v - theta_p) : 0.1 * v;
    }
    return out;
}

Grid horizontal_inhibit(const GridView& s_p, const Kernel& k_h, double sigma_h) {
    Grid pooled = convolve(s_p, k_h);
    const double* sp = s_p.data();
    double* o = pooled.data();
    const Eigen::Index n = s_p.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = sp[i] - sigma_h * o[i];
        o[i] = x > 0.0 ? x : 0.0;
    }
    return pooled;
}

BipolarResponse bipolar_onoff(const GridView& s_h, double theta_b, double g_b) {
    BipolarResponse r;
    r.on.resize(s_h.rows(), s_h.cols());
    r.off.resize(s_h.rows(), s_h.cols());
    r.contrast.resize(s_h.rows(), s_h.cols());
    const double* sh = s_h.data();
    double* on = r.on.data();
    double* off = r.off.data();
    double* c = r.contrast.data();
    const Eigen::Index n = s_h.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double on_raw = g_b * (sh[i] - theta_b);
        const double off_raw = g_b * (-sh[i] - theta_b);
        on[i] = on_raw > 0.0 ? on_raw : 0.0;
        off[i] = off_raw > 0.0 ? off_raw : 0.0;
        c[i] = on[i] + off[i];
    }
    return r;
}

Grid amacrine_update(const GridView& c_t, const RcaState& state, double alpha, double beta,
                     Grid* r_out) {
    const Eigen::Index n = c_t.size();
    const bool first = state.t == 0;
    if (!first && (!same_dims(c_t, state.s_prev_b) || !same_dims(c_t, state.s_prev_a)))
        fail(ErrorCode::dimension, "contrast map does not match stored temporal memory");

    Grid response;
    if (first) {
        // First frame of the sequence: spatial edge strength seeds the state.
        response = sobel_gradient_magnitude(c_t);
        double* r = response.data();
        for (Eigen::Index i = 0; i < n; ++i) r[i] = beta * r[i];
    } else {
        response.resize(c_t.rows(), c_t.cols());
        const double* c = c_t.data();
        const double* prev = state.s_prev_b.data();
        double* r = response.data();
        for (Eigen::Index i = 0; i < n; ++i) r[i] = beta * std::fabs(c[i] - prev[i]);
    }

    Grid s_a(c_t.rows(), c_t.cols());
    const double* r = response.data();
    double* a = s_a.data();
    if (first) {
        for (Eigen::Index i = 0; i < n; ++i) a[i] = alpha * 0.0 + (1.0 - alpha) * r[i];
    } else {
        const double* prev_a = state.s_prev_a.data();
        for (Eigen::Index i = 0; i < n; ++i) a[i] = alpha * prev_a[i] + (1.0 - alpha) * r[i];
    }
    if (r_out) *r_out = std::move(response);
    return s_a;
}

Grid magno_integrate(const GridView& c_t, const GridView& s_a, const Kernel& k_m,
                     const RcaParams& params, MagnoIntermediates* inter) {
    if (!same_dims(c_t, s_a))
        fail(ErrorCode::dimension, "contrast and amacrine grids differ in size");
    const Eigen::Index n = c_t.size();
    Grid integrated(c_t.rows(), c_t.cols());
    {
        const double* c = c_t.data();
        const double* a = s_a.data();
        double* o = integrated.data();
        for (Eigen::Index i = 0; i < n; ++i) o[i] = c[i] + params.gamma_a * a[i];
    }
    Grid m_s = convolve(integrated, k_m);
    Grid s_m(c_t.rows(), c_t.cols());
    {
        const double* ms = m_s.data();
        const double* a = s_a.data();
        double* o = s_m.data();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double arg = (ms[i] + params.gamma_tau * a[i]) - params.theta_m;
            o[i] = arg > 0.0 ? params.g_m * std::tanh(arg) : 0.0;
        }
    }
    if (inter) {
        inter->m_tau.resize(c_t.rows(), c_t.cols());
        const double* a = s_a.data();
        double* o = inter->m_tau.data();
        for (Eigen::Index i = 0; i < n; ++i) o[i] = params.gamma_tau * a[i];
        inter->integrated = std::move(integrated);
        inter->m_s = std::move(m_s);
    }
    return s_m;
}

Grid enhance(const GridView& raw, const RcaParams& params) {
    const Eigen::Index n = raw.size();
    Grid compressed(raw.rows(), raw.cols());
    {
        const double* in = raw.data();
        double* o = compressed.data();
        for (Eigen::Index i = 0; i < n; ++i)
            o[i] = in[i] > 0.0 ? std::pow(in[i], params.gamma_p) : 0.0;
    }
    Grid filtered = bilateral_filter(compressed, params.bilateral_d, params.bilateral_sigma_color,
                                     params.bilateral_sigma_space);
    double peak = 0.0;
    {
        const double* z = filtered.data();
        for (Eigen::Index i = 0; i < n; ++i)
            if (z[i] > peak) peak = z[i];
    }
    if (!(peak > 1e-12)) return Grid::Zero(raw.rows(), raw.cols());
    double* z = filtered.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (z[i] == peak) {
            z[i] = 255.0;
        } else {
            const double v = 255.0 * z[i] / peak;
            z[i] = v > 255.0 ? 255.0 : v;
        }
    }
    return filtered;
}

RcaEngine::RcaEngine(RcaParams params, bool trace_enabled)
    : params_(params),
      k_h_(gaussian_kernel(params.kh_size, params.kh_sigma)),
      k_m_(mexican_hat_kernel(params.dog_size_param, params.dog_sigma1, params.dog_sigma2,
                              params.dog_w_surr)),
      trace_enabled_(trace_enabled) {
    params_validate(params_);
}

void RcaEngine::reset() {
    state_reset(state_);
    last_trace_.reset();
}

Grid RcaEngine::step(const GridView& frame) {
    check_dims(frame.rows(), frame.cols());
    if (!grid_finite(frame)) fail(ErrorCode::parameter, "frame contains non-finite values");
    if (state_.t == 0) {
        if (!state_.allocated() || state_.height() != frame.rows() || state_.width() != frame.cols())
            state_allocate(state_, frame.rows(), frame.cols());
    } else if (state_.height() != frame.rows() || state_.width() != frame.cols()) {
        fail(ErrorCode::sequence,
             "frame dimensions changed mid-sequence: expected " + std::to_string(state_.height()) +
                 "x" + std::to_string(state_.width()) + ", got " + std::to_string(frame.rows()) +
                 "x" + std::to_string(frame.cols()));
    }

    Grid s_p = photoreceptor_adapt(frame, params_.theta_p, params_.g_p);
    Grid s_h = horizontal_inhibit(s_p, k_h_, params_.sigma_h);
    BipolarResponse bip = bipolar_onoff(s_h, params_.theta_b, params_.g_b);
    Grid r_t;
    Grid s_a = amacrine_update(bip.contrast, state_, params_.alpha, params_.beta,
                               trace_enabled_ ? &r_t : nullptr);
    MagnoIntermediates inter;
    Grid s_m = magno_integrate(bip.contrast, s_a, k_m_, params_,
                               trace_enabled_ ? &inter : nullptr);

    Grid blend(frame.rows(), frame.cols());
    {
        const double* m = s_m.data();
        const double* a = s_a.data();
        double* o = blend.data();
        const Eigen::Index n = blend.size();
        for (Eigen::Index i = 0; i < n; ++i)
            o[i] = params_.eta_m * m[i] + (1.0 - params_.eta_m) * a[i];
    }
    Grid motion = enhance(blend, params_);

    if (trace_enabled_) {
        LayerTrace trace;
        trace.s_p = s_p;
        trace.s_h = s_h;
        trace.c_t = bip.contrast;
        trace.r_t = std::move(r_t);
        trace.s_a = s_a;
        trace.integrated = std::move(inter.integrated);
        trace.m_s = std::move(inter.m_s);
        trace.m_tau = std::move(inter.m_tau);
        trace.s_m = s_m;
        trace.motion = motion;
        last_trace_ = std::move(trace);
    }

    // Commit temporal memory for the next step.
    state_.s_p = std::move(s_p);
    state_.s_h = std::move(s_h);
    state_.s_prev_b = std::move(bip.contrast);
    state_.s_prev_a = s_a;
    state_.s_a = std::move(s_a);
    state_.s_m = std::move(s_m);
    state_.t += 1;
    return motion;
}

std::vector<Grid> RcaEngine::process_sequence(const std::vector<Grid>& frames) {
    if (frames.empty()) fail(ErrorCode::parameter, "frame sequence is empty");
    reset();
    std::vector<Grid> maps;
    maps.reserve(frames.size());
    for (const Grid& frame : frames) maps.push_back(step(frame));
    return maps;
}

}  // namespace retina
