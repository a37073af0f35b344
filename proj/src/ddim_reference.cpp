#include "infedit/ddim_reference.hpp"

#include <cstddef>

#include "infedit/diffusion.hpp"

namespace infedit {

DdimRoundTrip ddim_round_trip(const Latent& z0, const Condition& cond,
                              const ConditionalDenoiser& denoiser, const TimestepSequence& taus,
                              const VarianceSchedule& schedule) {
    require_finite(z0, "ddim_round_trip z0");
    const std::vector<int>& down_order = taus.taus;
    const std::size_t n = down_order.size();

    DdimRoundTrip result;
    result.up.reserve(n);
    result.down.reserve(n);

    // Inversion: climb the ladder from t = 0 to the highest timestep.  The
    // noise estimate comes from the latent's current level except for the very
    // first step, where the latent sits at t = 0 and the destination level is
    // queried instead.  The initial-sample estimate at t = 0 is the latent
    // itself.
    Latent z = z0;
    int t_current = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int t_next = down_order[n - 1 - i];
        const int t_eval = (t_current == 0) ? t_next : t_current;
        const Latent eps = denoiser.predict(z, t_eval, cond);
        require_same_shape(eps, z, "ddim_round_trip inversion noise estimate");
        require_finite(eps, "ddim_round_trip inversion noise estimate");

        const Latent x0 = (t_current == 0) ? z : predict_x0(z, t_current, eps, schedule);
        const double a = schedule.sqrt_alpha_bar(t_next);
        const double b = schedule.sqrt_one_minus_alpha_bar(t_next);
        Latent z_next = Latent::zeros(z.shape);
        for (std::size_t j = 0; j < z_next.data.size(); ++j) {
            z_next.data[j] = a * x0.data[j] + b * eps.data[j];
        }
        require_finite(z_next, "ddim_round_trip inversion step");

        z = std::move(z_next);
        t_current = t_next;
        result.up.push_back({static_cast<int>(i + 1), t_current, z, x0});
    }
    result.z_terminal = z;

    // Resampling: deterministic steps (sigma = 0) back down the same ladder,
    // recording the initial-sample estimate produced at every level.
    const Latent no_noise = Latent::zeros(z0.shape);
    for (std::size_t i = 0; i < n; ++i) {
        const int t = down_order[i];
        const int t_prev = (i + 1 < n) ? down_order[i + 1] : 0;
        const Latent eps = denoiser.predict(z, t, cond);
        require_same_shape(eps, z, "ddim_round_trip resampling noise estimate");
        require_finite(eps, "ddim_round_trip resampling noise estimate");
        const Latent x0 = predict_x0(z, t, eps, schedule);
        z = generalized_step(z, t, t_prev, eps, SigmaChoice::deterministic(), no_noise, schedule);
        result.down.push_back({static_cast<int>(i + 1), t, z, x0});
    }
    result.z0_recovered = z;
    return result;
}

}  // namespace infedit
