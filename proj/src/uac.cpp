#include "infedit/uac.hpp"

#include <stdexcept>

namespace infedit {

namespace {

std::optional<BlendMasks> threshold_blend_masks(const UacConfig& config,
                                                const CrossAttentionMap& tgt_map,
                                                const CrossAttentionMap& src_map) {
    if (!config.blend.active()) return std::nullopt;
    BlendMasks masks;
    // A side with no marked tokens contributes an all-zero mask: it neither
    // adds to nor shields from the edited region.
    masks.mask_tgt = config.blend.target_tokens.empty()
                         ? Matrix(tgt_map.num_pixels(), 1)
                         : threshold_mask(token_column_mean(tgt_map, config.blend.target_tokens),
                                          config.blend.threshold_tgt);
    masks.mask_src = config.blend.source_tokens.empty()
                         ? Matrix(src_map.num_pixels(), 1)
                         : threshold_mask(token_column_mean(src_map, config.blend.source_tokens),
                                          config.blend.threshold_src);
    return masks;
}

}  // namespace

UacEvaluation uac_evaluate(const Latent& z_src, const Latent& z_tgt, const Latent& z_lay, int t,
                           const Condition& c_src, const Condition& c_tgt,
                           const ConditionalDenoiser& denoiser, const UacConfig& config,
                           const Latent* precomputed_eps_src,
                           const AttentionCapture* precomputed_src_capture) {
    if (!denoiser.supports_capture() || !denoiser.supports_inject()) {
        throw CapabilityError("denoiser '" + denoiser.name() +
                              "' lacks the attention capture/injection attention control requires");
    }
    if (config.align.size() != c_tgt.size()) {
        throw std::invalid_argument("uac_evaluate: alignment covers " +
                                    std::to_string(config.align.size()) +
                                    " tokens, target condition has " +
                                    std::to_string(c_tgt.size()));
    }

    UacEvaluation ev;

    // Captured source and target predictions.
    if (precomputed_eps_src && precomputed_src_capture) {
        ev.eps_src = *precomputed_eps_src;
        ev.src_capture = *precomputed_src_capture;
    } else {
        ev.eps_src = denoiser.predict_captured(z_src, t, c_src, ev.src_capture);
    }
    ev.eps_tgt = denoiser.predict_captured(z_tgt, t, c_tgt, ev.tgt_capture);

    // Layout prediction: source condition, self-attention pack merged from
    // both branches.
    AttentionInjection lay_injection;
    lay_injection.self_qkv =
        self_edit(ev.src_capture.self_qkv, ev.tgt_capture.self_qkv, t, config.control.tau_self);
    AttentionCapture lay_capture;
    ev.eps_lay = denoiser.predict_injected(z_lay, t, c_src, lay_injection, &lay_capture);
    ev.layout_map = std::move(lay_capture.cross_map);

    // Target re-prediction under the edited cross map (cross map only; the
    // target's own self-attention stays).
    ev.refined_target_map =
        cross_edit(ev.layout_map, ev.tgt_capture.cross_map, config.align, t, config.control.tau_cross);
    AttentionInjection tgt_injection;
    tgt_injection.cross_map = ev.refined_target_map;
    ev.eps_tgt_refined = denoiser.predict_injected(z_tgt, t, c_tgt, tgt_injection, nullptr);

    // Blend masks from this step's (uncontrolled) source/target maps.
    ev.masks = threshold_blend_masks(config, ev.tgt_capture.cross_map, ev.src_capture.cross_map);
    return ev;
}

UacStepResult uac_step(const BranchState& state, int t, int t_next, const Latent& shared_noise,
                       const Condition& c_src, const Condition& c_tgt,
                       const ConditionalDenoiser& denoiser, const UacConfig& config,
                       const VarianceSchedule& schedule) {
    if (!state.z_lay) {
        throw std::invalid_argument("uac_step: branch state carries no layout latent");
    }

    UacStepResult result;
    result.eval = uac_evaluate(state.z_src, state.z_tgt, *state.z_lay, t, c_src, c_tgt, denoiser,
                               config, nullptr, nullptr);

    const Latent eps_cons = epsilon_cons(state.z_src, t, state.z0_src, schedule);
    const Latent z0_tgt = calibrated_initial(state.z_tgt, t, result.eval.eps_tgt_refined,
                                             result.eval.eps_src, eps_cons, schedule);
    const std::optional<Latent> z0_lay = predict_x0(*state.z_lay, t, result.eval.eps_lay, schedule);

    AdvancedBranches adv = advance_branches(state.z0_src, z0_tgt, z0_lay, t_next, shared_noise,
                                            result.eval.masks, schedule);
    result.next = BranchState{std::move(adv.z_src), std::move(adv.z_tgt), std::move(adv.z_lay),
                              state.z0_src,          z0_tgt,               state.step_index + 1,
                              t_next};
    return result;
}

RefinerResult UacRefiner::refine(const RefinerContext& ctx) {
    if (!ctx.state.z_lay) {
        throw std::logic_error("UacRefiner: engine provided no layout branch");
    }
    const UacEvaluation ev =
        uac_evaluate(ctx.state.z_src, ctx.state.z_tgt, *ctx.state.z_lay, ctx.t, ctx.c_src,
                     ctx.c_tgt, ctx.denoiser, config_, &ctx.eps_src, ctx.source_capture);
    RefinerResult out;
    out.eps_tgt = ev.eps_tgt_refined;
    out.eps_lay = ev.eps_lay;
    out.blend = ev.masks;
    return out;
}

}  // namespace infedit
