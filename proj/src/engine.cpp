#include "infedit/engine.hpp"

#include <stdexcept>
#include <string>

namespace infedit {

namespace {

// Re-raise denoiser/control failures with the step and branch attached, so an
// error deep inside a run says where it happened.
[[noreturn]] void rethrow_with_step(const std::exception& e, int step_index, int timestep,
                                    const char* branch) {
    throw std::runtime_error("edit step " + std::to_string(step_index) + " (timestep " +
                             std::to_string(timestep) + "), " + branch + " branch: " + e.what());
}

}  // namespace

RefinerResult TrivialRefiner::refine(const RefinerContext& ctx) {
    RefinerResult out;
    out.eps_tgt = ctx.denoiser.predict(ctx.state.z_tgt, ctx.t, ctx.c_tgt);
    return out;
}

Latent calibrated_initial(const Latent& z_tgt_t, int t, const Latent& eps_tgt,
                          const Latent& eps_src, const Latent& eps_cons,
                          const VarianceSchedule& schedule) {
    require_same_shape(z_tgt_t, eps_tgt, "calibrated_initial (eps_tgt)");
    require_same_shape(z_tgt_t, eps_src, "calibrated_initial (eps_src)");
    require_same_shape(z_tgt_t, eps_cons, "calibrated_initial (eps_cons)");
    Latent combined = Latent::zeros(z_tgt_t.shape);
    for (std::size_t i = 0; i < combined.numel(); ++i) {
        combined[i] = eps_tgt[i] - eps_src[i] + eps_cons[i];
    }
    return predict_x0(z_tgt_t, t, combined, schedule);
}

AdvancedBranches advance_branches(const Latent& z0_src, const Latent& z0_tgt,
                                  const std::optional<Latent>& z0_lay, int t_next,
                                  const Latent& shared_noise,
                                  const std::optional<BlendMasks>& blend,
                                  const VarianceSchedule& schedule) {
    AdvancedBranches out;
    out.z_src = forward_noise(z0_src, t_next, shared_noise, schedule);
    out.z_tgt = forward_noise(z0_tgt, t_next, shared_noise, schedule);
    if (z0_lay) {
        out.z_lay = forward_noise(*z0_lay, t_next, shared_noise, schedule);
    }
    if (blend) {
        out.z_tgt = local_blend(out.z_tgt, out.z_src, blend->mask_tgt, blend->mask_src);
    }
    return out;
}

EditResult infedit_run(const Latent& z0_src, const Condition& c_src, const Condition& c_tgt,
                       const ConditionalDenoiser& denoiser, const TimestepSequence& taus,
                       const VarianceSchedule& schedule, NoiseRefiner& refiner,
                       const StreamFactory& rng) {
    require_finite(z0_src, "infedit_run (z0_src)");
    for (int tau : taus.taus) {
        if (tau > schedule.total_steps()) {
            throw std::invalid_argument("infedit_run: timestep " + std::to_string(tau) +
                                        " exceeds schedule length " +
                                        std::to_string(schedule.total_steps()));
        }
    }
    const bool layout = refiner.wants_layout_branch();
    const bool capture_src = refiner.wants_source_capture();
    if ((capture_src || layout) &&
        (!denoiser.supports_capture() || !denoiser.supports_inject())) {
        throw CapabilityError("denoiser '" + denoiser.name() +
                              "' lacks the attention capture/injection the refiner requires");
    }

    const std::size_t n_steps = taus.size();
    EditResult result;
    result.states.reserve(n_steps);
    result.stats.reserve(n_steps);

    // One shared terminal draw: every branch starts from the same noise.
    const Latent terminal = rng.stream("terminal", 0).normal_latent(z0_src.shape);
    Latent z_src = terminal;
    Latent z_tgt = terminal;
    std::optional<Latent> z_lay;
    if (layout) z_lay = terminal;

    Latent z0_tgt = z0_src;  // placeholder until the first calibration below

    for (std::size_t i = 0; i < n_steps; ++i) {
        const int t = taus[i];
        const int step_index = static_cast<int>(i) + 1;

        // Source prediction (captured only when the refiner consumes it).
        Latent eps_src;
        AttentionCapture src_capture;
        try {
            eps_src = capture_src ? denoiser.predict_captured(z_src, t, c_src, src_capture)
                                  : denoiser.predict(z_src, t, c_src);
        } catch (const CapabilityError&) {
            throw;
        } catch (const std::exception& e) {
            rethrow_with_step(e, step_index, t, "source");
        }

        // Consistent noise in closed form against the reference initial.
        const Latent eps_cons = epsilon_cons(z_src, t, z0_src, schedule);

        // Target prediction: plain on the first step, refined afterwards.
        RefinerResult refined;
        BranchState view{z_src, z_tgt, z_lay, z0_src, z0_tgt, step_index, t};
        try {
            if (i == 0) {
                refined.eps_tgt = denoiser.predict(z_tgt, t, c_tgt);
                if (layout) {
                    // The layout branch starts alongside the others with a
                    // plain source-conditioned prediction.
                    refined.eps_lay = denoiser.predict(*z_lay, t, c_src);
                }
            } else {
                const RefinerContext ctx{view,    t,        c_src,   c_tgt,
                                         denoiser, schedule, eps_src, capture_src ? &src_capture : nullptr};
                refined = refiner.refine(ctx);
            }
        } catch (const CapabilityError&) {
            throw;
        } catch (const std::exception& e) {
            rethrow_with_step(e, step_index, t, "target");
        }
        require_same_shape(refined.eps_tgt, z_tgt, "infedit_run (refined eps_tgt)");
        if (layout != refined.eps_lay.has_value()) {
            throw std::logic_error("infedit_run: refiner layout-branch contract violated at step " +
                                   std::to_string(step_index));
        }

        // Calibrated target-initial update.
        z0_tgt = calibrated_initial(z_tgt, t, refined.eps_tgt, eps_src, eps_cons, schedule);

        std::optional<Latent> z0_lay;
        if (layout) {
            z0_lay = predict_x0(*z_lay, t, *refined.eps_lay, schedule);
        }

        result.states.push_back(BranchState{z_src, z_tgt, z_lay, z0_src, z0_tgt, step_index, t});
        result.stats.push_back(EditStepStats{step_index, t, max_abs_diff(z0_tgt, z0_src),
                                             max_abs_diff(refined.eps_tgt, eps_src)});

        // Advance to the next timestep (0 closes the run) with one shared
        // fresh noise; apply the refiner's masks to the advanced target.
        const int t_next = (i + 1 < n_steps) ? taus[i + 1] : 0;
        const Latent shared = (t_next > 0)
                                  ? rng.stream("shared", static_cast<std::uint64_t>(step_index))
                                        .normal_latent(z0_src.shape)
                                  : Latent::zeros(z0_src.shape);
        AdvancedBranches adv =
            advance_branches(z0_src, z0_tgt, z0_lay, t_next, shared, refined.blend, schedule);
        z_src = std::move(adv.z_src);
        z_tgt = std::move(adv.z_tgt);
        z_lay = std::move(adv.z_lay);
    }

    result.z0_tgt = z_tgt;  // advanced to t = 0: the calibrated initial, post-blend
    return result;
}

}  // namespace infedit
