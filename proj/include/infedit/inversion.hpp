#pragma once

#include <vector>

#include "infedit/diffusion.hpp"
#include "infedit/latent.hpp"
#include "infedit/rng.hpp"
#include "infedit/schedules.hpp"

namespace infedit {

// Consistent noise: the exact eps that maps z0 to z_t under the forward
// relation, eps = (z_t - sqrt(a_t) z0) / sqrt(1 - a_t).  Rejects timesteps
// with alpha_bar(t) >= 1 - 1e-12: the denominator cancellation there would
// amplify rounding past any useful tolerance.
Latent epsilon_cons(const Latent& z_t, int t, const Latent& z0, const VarianceSchedule& schedule);

struct InversionTraceStep {
    int step_index;   // 1-based position in the timestep sequence
    int timestep;
    Latent z_noised;  // latent fed to the predictor at this timestep
    Latent eps_cons;  // consistent noise used
    Latent z;         // running reconstruction after the step
};

// Per-step record of a virtual inversion; `stride` controls how densely steps
// were recorded (the final step is always recorded).
struct InversionTrace {
    int stride = 1;
    std::vector<InversionTraceStep> steps;
};

struct InversionResult {
    Latent z;  // final reconstruction
    InversionTrace trace;
};

// Reconstruction without inversion: draw terminal noise, take the consistent
// noise against the reference z0, predict the clean latent, then repeatedly
// re-noise the running estimate with fresh noise and repeat.  Every step is
// exact by construction (the consistent noise makes the predictor reproduce
// z0 up to rounding), independent of the noise draws.
InversionResult virtual_invert(const Latent& z0, const TimestepSequence& taus,
                               const VarianceSchedule& schedule, RngStream& rng,
                               int trace_stride = 1);

}  // namespace infedit
