#include "infedit/diffusion.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace infedit {

namespace {

void require_timestep_ge(int t, int lo, const VarianceSchedule& schedule, const char* context) {
    if (t < lo || t > schedule.total_steps()) {
        throw std::invalid_argument(std::string(context) + ": timestep " + std::to_string(t) +
                                    " outside [" + std::to_string(lo) + ", " +
                                    std::to_string(schedule.total_steps()) + "]");
    }
}

}  // namespace

double SigmaChoice::value(const VarianceSchedule& schedule, int t, int t_prev) const {
    const double a_prev = schedule.alpha_bar(t_prev);
    switch (kind) {
        case Kind::Deterministic:
            return 0.0;
        case Kind::Ancestral: {
            const double a_t = schedule.alpha_bar(t);
            if (t <= t_prev) {
                throw std::invalid_argument("SigmaChoice::ancestral: requires t > t_prev");
            }
            const double var = (1.0 - a_prev) / (1.0 - a_t) * (1.0 - a_t / a_prev);
            return std::sqrt(var);
        }
        case Kind::Consistent:
            return std::sqrt(1.0 - a_prev);
        case Kind::Explicit: {
            if (!std::isfinite(explicit_value) || explicit_value < 0.0) {
                throw std::invalid_argument("SigmaChoice::explicit: sigma must be finite and >= 0");
            }
            return explicit_value;
        }
    }
    throw std::logic_error("SigmaChoice: unknown kind");
}

Latent forward_noise(const Latent& z0, int t, const Latent& eps, const VarianceSchedule& schedule) {
    require_timestep_ge(t, 0, schedule, "forward_noise");
    require_same_shape(z0, eps, "forward_noise");
    require_finite(z0, "forward_noise (z0)");
    require_finite(eps, "forward_noise (eps)");
    const double a = schedule.sqrt_alpha_bar(t);
    const double b = schedule.sqrt_one_minus_alpha_bar(t);
    Latent out = Latent::zeros(z0.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = a * z0[i] + b * eps[i];
    }
    require_finite(out, "forward_noise (result)");
    return out;
}

Latent predict_x0(const Latent& z_t, int t, const Latent& eps_pred, const VarianceSchedule& schedule) {
    require_timestep_ge(t, 1, schedule, "predict_x0");
    require_same_shape(z_t, eps_pred, "predict_x0");
    require_finite(z_t, "predict_x0 (z_t)");
    require_finite(eps_pred, "predict_x0 (eps)");
    const double a = schedule.sqrt_alpha_bar(t);
    const double b = schedule.sqrt_one_minus_alpha_bar(t);
    Latent out = Latent::zeros(z_t.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = (z_t[i] - b * eps_pred[i]) / a;
    }
    require_finite(out, "predict_x0 (result)");
    return out;
}

Latent ddcm_step(const Latent& z0_pred, int t_prev, const Latent& noise,
                 const VarianceSchedule& schedule) {
    require_timestep_ge(t_prev, 0, schedule, "ddcm_step");
    require_same_shape(z0_pred, noise, "ddcm_step");
    require_finite(z0_pred, "ddcm_step (z0_pred)");
    require_finite(noise, "ddcm_step (noise)");
    const double a = schedule.sqrt_alpha_bar(t_prev);
    const double b = schedule.sqrt_one_minus_alpha_bar(t_prev);
    Latent out = Latent::zeros(z0_pred.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = a * z0_pred[i] + b * noise[i];
    }
    require_finite(out, "ddcm_step (result)");
    return out;
}

Latent generalized_step(const Latent& z_t, int t, int t_prev, const Latent& eps_pred,
                        const SigmaChoice& sigma, const Latent& noise,
                        const VarianceSchedule& schedule) {
    require_timestep_ge(t, 1, schedule, "generalized_step");
    require_timestep_ge(t_prev, 0, schedule, "generalized_step (t_prev)");
    if (t_prev >= t) {
        throw std::invalid_argument("generalized_step: requires t > t_prev, got t = " +
                                    std::to_string(t) + ", t_prev = " + std::to_string(t_prev));
    }
    require_same_shape(z_t, eps_pred, "generalized_step");
    require_same_shape(z_t, noise, "generalized_step (noise)");
    require_finite(z_t, "generalized_step (z_t)");
    require_finite(eps_pred, "generalized_step (eps)");
    require_finite(noise, "generalized_step (noise)");

    const double a_prev = schedule.alpha_bar(t_prev);
    const double s = sigma.value(schedule, t, t_prev);

    double direction_coeff;
    if (sigma.kind == SigmaChoice::Kind::Consistent) {
        // 1 - a_prev - sigma^2 vanishes identically at this noise level.
        direction_coeff = 0.0;
    } else {
        double radicand = 1.0 - a_prev - s * s;
        // Tolerate rounding when sigma was supplied at (or derived to be) the
        // maximal admissible level; anything further negative is a genuinely
        // imaginary coefficient.
        const double slack = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 - a_prev);
        if (radicand < 0.0) {
            if (radicand >= -slack) {
                radicand = 0.0;
            } else {
                throw std::invalid_argument(
                    "generalized_step: sigma^2 = " + std::to_string(s * s) +
                    " exceeds 1 - alpha_bar(t_prev) = " + std::to_string(1.0 - a_prev) +
                    " (imaginary direction coefficient)");
            }
        }
        direction_coeff = std::sqrt(radicand);
    }

    const Latent x0 = predict_x0(z_t, t, eps_pred, schedule);
    const double a = schedule.sqrt_alpha_bar(t_prev);
    Latent out = Latent::zeros(z_t.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = a * x0[i] + direction_coeff * eps_pred[i] + s * noise[i];
    }
    require_finite(out, "generalized_step (result)");
    return out;
}

Latent consistency_sample(const ConsistencyFn& f, const TimestepSequence& taus, const Shape& shape,
                          const VarianceSchedule& schedule, RngStream& rng) {
    if (!f) {
        throw std::invalid_argument("consistency_sample: consistency function is empty");
    }
    for (int tau : taus.taus) {
        if (tau > schedule.total_steps()) {
            throw std::invalid_argument("consistency_sample: timestep " + std::to_string(tau) +
                                        " exceeds schedule length " +
                                        std::to_string(schedule.total_steps()));
        }
    }
    Latent z_hat = rng.normal_latent(shape);  // terminal draw, interpreted at tau_1
    Latent z = f(z_hat, taus[0]);
    require_same_shape(z, z_hat, "consistency_sample (f output)");
    require_finite(z, "consistency_sample (f output)");
    for (std::size_t n = 1; n < taus.size(); ++n) {
        const Latent eps = rng.normal_latent(shape);
        z_hat = ddcm_step(z, taus[n], eps, schedule);
        z = f(z_hat, taus[n]);
        require_same_shape(z, z_hat, "consistency_sample (f output)");
        require_finite(z, "consistency_sample (f output)");
    }
    return z;
}

}  // namespace infedit
