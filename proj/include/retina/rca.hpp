#pragma once

#include <optional>
#include <vector>

#include "retina/grid.hpp"
#include "retina/kernels.hpp"
#include "retina/params.hpp"
#include "retina/state.hpp"

namespace retina {

// ---------------------------------------------------------------------------
// Layer operations. Each is a pure function over its inputs; the engine wires
// them together in order and owns the temporal state.
// ---------------------------------------------------------------------------

// Layer 1. Per pixel: g_p * tanh(v - theta_p) when v > theta_p, else 0.1 * v.
// Frames are expected in [0, 1] (sequence loading normalizes them).
Grid photoreceptor_adapt(const GridView& frame, double theta_p, double g_p);

// Layer 2. max(s_p - sigma_h * (k_h * s_p), 0) element-wise.
Grid horizontal_inhibit(const GridView& s_p, const Kernel& k_h, double sigma_h);

struct BipolarResponse {
    Grid on;        // max(g_b (s_h - theta_b), 0)
    Grid off;       // max(g_b (-s_h - theta_b), 0)
    Grid contrast;  // on + off
};

// Layer 3. Rectified ON/OFF channels plus their sum, the contrast map C_t.
BipolarResponse bipolar_onoff(const GridView& s_h, double theta_b, double g_b);

// Layer 4. Temporal response R (Sobel gradient magnitude of C on the first
// frame, beta * |C - C_prev| afterwards) smoothed into the amacrine state:
// S_a = alpha * S_prev_a + (1 - alpha) * R. Reads the temporal memory but does
// not commit it; the step driver does. state.t == 0 marks the first frame.
// Optionally reports R through r_out.
Grid amacrine_update(const GridView& c_t, const RcaState& state, double alpha, double beta,
                     Grid* r_out = nullptr);

struct MagnoIntermediates {
    Grid integrated;  // C_t + gamma_a * S_a
    Grid m_s;         // k_m * integrated
    Grid m_tau;       // gamma_tau * S_a
};

// Layer 5. S_m = g_m * max(0, tanh(M_s + M_tau - theta_m)).
Grid magno_integrate(const GridView& c_t, const GridView& s_a, const Kernel& k_m,
                     const RcaParams& params, MagnoIntermediates* inter = nullptr);

// Output enhancement: rectified power-law compression, bilateral filtering,
// then max-normalization to [0, 255]. A map whose filtered maximum is at or
// below 1e-12 comes out all zeros (blank-scene guard); otherwise the arg-max
// pixels are exactly 255.
Grid enhance(const GridView& raw, const RcaParams& params);

// ---------------------------------------------------------------------------
// Engine: one engine = one sequence = one logical worker.
// ---------------------------------------------------------------------------

class RcaEngine {
public:
    explicit RcaEngine(RcaParams params = RcaParams{}, bool trace_enabled = false);

    const RcaParams& params() const noexcept { return params_; }
    const RcaState& state() const noexcept { return state_; }
    const Kernel& horizontal_kernel() const noexcept { return k_h_; }
    const Kernel& magno_kernel() const noexcept { return k_m_; }
    bool trace_enabled() const noexcept { return trace_enabled_; }

    // Zeroes the temporal state; the next step starts a new sequence and may
    // use new frame dimensions.
    void reset();

    // Processes one frame: runs layers 1-5, produces the motion map, then
    // commits temporal memory (S_prev_b <- C_t, S_prev_a <- S_a, t <- t+1).
    // Strictly causal. A dimension change mid-sequence is a sequence error.
    Grid step(const GridView& frame);

    // Intermediates of the most recent step; engaged only when tracing.
    const std::optional<LayerTrace>& last_trace() const noexcept { return last_trace_; }

    // Resets, then steps over the frames in order. One motion map per frame,
    // pixel-aligned with its input.
    std::vector<Grid> process_sequence(const std::vector<Grid>& frames);

private:
    RcaParams params_;
    Kernel k_h_;
    Kernel k_m_;
    RcaState state_;
    bool trace_enabled_;
    std::optional<LayerTrace> last_trace_;
};

}  // namespace retina
