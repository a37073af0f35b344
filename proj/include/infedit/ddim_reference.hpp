#pragma once

#include <vector>

#include "infedit/denoiser.hpp"
#include "infedit/latent.hpp"
#include "infedit/schedules.hpp"

namespace infedit {

// One recorded point of a deterministic round trip: after visiting `timestep`
// the latent was `z` and the denoiser's initial-sample estimate was `x0_pred`.
struct DdimTraceStep {
    int step_index = 0;  // 1-based within its pass
    int timestep = 0;
    Latent z;
    Latent x0_pred;
};

// Result of explicit inversion (noising ladder driven by the denoiser's own
// noise estimates) followed by deterministic resampling back down.
struct DdimRoundTrip {
    std::vector<DdimTraceStep> up;    // one entry per inversion step, low to high
    std::vector<DdimTraceStep> down;  // one entry per resampling step, high to low
    Latent z_terminal;                // latent at the highest timestep
    Latent z0_recovered;              // latent after the final step down to t = 0
};

// Reference reconstruction pipeline used for sampler comparisons: invert z0
// up the timestep ladder, then resample deterministically (sigma = 0) back
// down.  Each up-step re-noises the current estimate using the noise the
// denoiser predicts at the latent's *current* level, which makes each step
// exactly invertible when the denoiser's initial-sample estimate does not
// move between adjacent levels; any level-dependence of the estimate shows up
// as accumulated reconstruction error.  The first up-step starts from t = 0,
// where no noise estimate exists, so it queries the denoiser at the step's
// destination level instead.
//
// `taus` is the sampling sequence (strictly decreasing); the inversion visits
// it in reverse.  Requires a finite z0 matching the denoiser's expectations.
DdimRoundTrip ddim_round_trip(const Latent& z0, const Condition& cond,
                              const ConditionalDenoiser& denoiser, const TimestepSequence& taus,
                              const VarianceSchedule& schedule);

}  // namespace infedit
