#pragma once

#include <functional>

#include "infedit/latent.hpp"
#include "infedit/rng.hpp"
#include "infedit/schedules.hpp"

namespace infedit {

// Noise level sigma_t for a generalized denoising transition t -> t_prev.
//
//   deterministic : sigma = 0 (DDIM)
//   ancestral     : sigma^2 = (1 - a_prev) / (1 - a_t) * (1 - a_t / a_prev)  (DDPM)
//   consistent    : sigma = sqrt(1 - a_prev); the direction term of the
//                   generalized step vanishes identically, so the transition
//                   collapses to the re-noising form (see generalized_step)
//   explicit      : caller-supplied value, validated against sigma^2 <= 1 - a_prev
struct SigmaChoice {
    enum class Kind { Deterministic, Ancestral, Consistent, Explicit };

    Kind kind = Kind::Deterministic;
    double explicit_value = 0.0;

    static SigmaChoice deterministic() { return {Kind::Deterministic, 0.0}; }
    static SigmaChoice ancestral() { return {Kind::Ancestral, 0.0}; }
    static SigmaChoice consistent() { return {Kind::Consistent, 0.0}; }
    static SigmaChoice explicit_sigma(double value) { return {Kind::Explicit, value}; }

    double value(const VarianceSchedule& schedule, int t, int t_prev) const;
};

// z_t = sqrt(a_t) z0 + sqrt(1 - a_t) eps.  t = 0 is the identity (a_0 = 1).
Latent forward_noise(const Latent& z0, int t, const Latent& eps, const VarianceSchedule& schedule);

// f(z_t, t, eps) = (z_t - sqrt(1 - a_t) eps) / sqrt(a_t).  Rejects t = 0.
Latent predict_x0(const Latent& z_t, int t, const Latent& eps_pred, const VarianceSchedule& schedule);

// z_{t_prev} = sqrt(a_prev) z0_pred + sqrt(1 - a_prev) noise: the denoising
// consistent-noise step, identical in form to forward_noise applied to the
// predicted clean latent.
Latent ddcm_step(const Latent& z0_pred, int t_prev, const Latent& noise, const VarianceSchedule& schedule);

// Full generalized transition
//   z_{t_prev} = sqrt(a_prev) f(z_t, t, eps_pred)
//              + sqrt(1 - a_prev - sigma^2) eps_pred + sigma * noise,
// with sigma per SigmaChoice.  For kind=consistent the middle coefficient is
// set to exactly zero (it vanishes algebraically; evaluating the radicand in
// floating point would inject ~1e-8 garbage or NaN), which makes the result
// bit-identical to ddcm_step(predict_x0(...), t_prev, noise).
Latent generalized_step(const Latent& z_t, int t, int t_prev, const Latent& eps_pred,
                        const SigmaChoice& sigma, const Latent& noise,
                        const VarianceSchedule& schedule);

// Evaluates a consistency function f(z, t) along a descending timestep
// sequence: draw terminal noise, apply f, then re-noise the running estimate
// at each subsequent timestep with fresh noise and apply f again.  Returns the
// final f output.
using ConsistencyFn = std::function<Latent(const Latent&, int)>;
Latent consistency_sample(const ConsistencyFn& f, const TimestepSequence& taus, const Shape& shape,
                          const VarianceSchedule& schedule, RngStream& rng);

}  // namespace infedit
