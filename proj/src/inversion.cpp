#include "infedit/inversion.hpp"

#include <stdexcept>
#include <string>

namespace infedit {

Latent epsilon_cons(const Latent& z_t, int t, const Latent& z0, const VarianceSchedule& schedule) {
    if (t < 0 || t > schedule.total_steps()) {
        throw std::invalid_argument("epsilon_cons: timestep " + std::to_string(t) + " outside [0, " +
                                    std::to_string(schedule.total_steps()) + "]");
    }
    const double a_bar = schedule.alpha_bar(t);
    if (a_bar >= 1.0 - 1e-12) {
        throw std::invalid_argument("epsilon_cons: alpha_bar(" + std::to_string(t) + ") = " +
                                    std::to_string(a_bar) +
                                    " too close to 1 (cancellation guard, requires < 1 - 1e-12)");
    }
    require_same_shape(z_t, z0, "epsilon_cons");
    require_finite(z_t, "epsilon_cons (z_t)");
    require_finite(z0, "epsilon_cons (z0)");
    const double a = schedule.sqrt_alpha_bar(t);
    const double b = schedule.sqrt_one_minus_alpha_bar(t);
    Latent out = Latent::zeros(z_t.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = (z_t[i] - a * z0[i]) / b;
    }
    require_finite(out, "epsilon_cons (result)");
    return out;
}

InversionResult virtual_invert(const Latent& z0, const TimestepSequence& taus,
                               const VarianceSchedule& schedule, RngStream& rng,
                               int trace_stride) {
    if (trace_stride < 1) {
        throw std::invalid_argument("virtual_invert: trace_stride must be >= 1");
    }
    require_finite(z0, "virtual_invert (z0)");

    InversionResult result;
    result.trace.stride = trace_stride;

    const std::size_t n_steps = taus.size();
    auto record = [&](std::size_t idx, int tau, const Latent& z_noised, const Latent& eps,
                      const Latent& z) {
        const bool last = idx + 1 == n_steps;
        if (last || idx % static_cast<std::size_t>(trace_stride) == 0) {
            result.trace.steps.push_back(
                {static_cast<int>(idx) + 1, tau, z_noised, eps, z});
        }
    };

    // Terminal draw at tau_1, then the first exact reconstruction.
    Latent z_noised = rng.normal_latent(z0.shape);
    Latent eps = epsilon_cons(z_noised, taus[0], z0, schedule);
    Latent z = predict_x0(z_noised, taus[0], eps, schedule);
    record(0, taus[0], z_noised, eps, z);

    // Re-noise the running estimate with fresh noise and reconstruct again.
    for (std::size_t n = 1; n < n_steps; ++n) {
        const Latent fresh = rng.normal_latent(z0.shape);
        z_noised = forward_noise(z, taus[n], fresh, schedule);
        eps = epsilon_cons(z_noised, taus[n], z0, schedule);
        z = predict_x0(z_noised, taus[n], eps, schedule);
        record(n, taus[n], z_noised, eps, z);
    }

    result.z = std::move(z);
    return result;
}

}  // namespace infedit
