#pragma once

#include <cstdint>
#include <optional>

#include "retina/grid.hpp"

namespace retina {

// Per-sequence mutable automaton state. Single-writer: one sequence is stepped
// by one logical worker; distinct sequences may run in parallel on their own
// states.
struct RcaState {
    Grid s_p, s_h, s_a, s_m;   // layer states after the latest step
    Grid s_prev_b;             // previous contrast map C_{t-1}
    Grid s_prev_a;             // previous amacrine state
    std::int64_t t = 0;        // frames committed so far (0 = fresh sequence)

    bool allocated() const noexcept { return s_a.size() > 0; }
    Eigen::Index height() const noexcept { return s_a.rows(); }
    Eigen::Index width() const noexcept { return s_a.cols(); }
};

// Zeroes every grid and the frame counter. Idempotent; a reset state behaves
// exactly like a freshly constructed one.
inline void state_reset(RcaState& state) {
    state.s_p.setZero();
    state.s_h.setZero();
    state.s_a.setZero();
    state.s_m.setZero();
    state.s_prev_b.setZero();
    state.s_prev_a.setZero();
    state.t = 0;
}

inline void state_allocate(RcaState& state, Eigen::Index height, Eigen::Index width) {
    check_dims(height, width);
    state.s_p = Grid::Zero(height, width);
    state.s_h = Grid::Zero(height, width);
    state.s_a = Grid::Zero(height, width);
    state.s_m = Grid::Zero(height, width);
    state.s_prev_b = Grid::Zero(height, width);
    state.s_prev_a = Grid::Zero(height, width);
    state.t = 0;
}

// Captured copies of every intermediate of one step, for the `inspect` CLI and
// layer-by-layer oracle tests. Capture must not perturb outputs.
struct LayerTrace {
    Grid s_p;         // photoreceptor output
    Grid s_h;         // horizontal-cell output
    Grid c_t;         // bipolar contrast map
    Grid r_t;         // amacrine temporal response
    Grid s_a;         // amacrine state
    Grid integrated;  // C_t + gamma_a * S_a
    Grid m_s;         // Mexican-hat response
    Grid m_tau;       // temporal component gamma_tau * S_a
    Grid s_m;         // magnocellular state
    Grid motion;      // final motion map M_t
};

}  // namespace retina
