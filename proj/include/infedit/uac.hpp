#pragma once

#include <optional>

#include "infedit/attention_control.hpp"
#include "infedit/engine.hpp"

namespace infedit {

// Full attention-control configuration for an edit: phase switches, token
// alignment (sized to the target condition), and the blend-region spec.
struct UacConfig {
    ControlSchedule control;
    AlignmentMap align;
    BlendSpec blend;
};

// Everything one controlled step computes before any latent is advanced.
struct UacEvaluation {
    Latent eps_src;                      // plain source prediction
    Latent eps_tgt;                      // plain target prediction
    Latent eps_lay;                      // layout prediction (source condition, edited self-attention)
    Latent eps_tgt_refined;              // target prediction under the edited cross map
    AttentionCapture src_capture;        // source QKV + map
    AttentionCapture tgt_capture;        // target QKV + map
    CrossAttentionMap layout_map;        // map captured from the layout prediction
    CrossAttentionMap refined_target_map;  // cross_edit(layout_map, target map)
    std::optional<BlendMasks> masks;     // thresholded blend masks of this step
};

// Controlled predictions of one step (no latent advance):
//   1. captured source and target predictions;
//   2. self_edit merges the two self-attention packs; the layout branch is
//      predicted under the source condition with that pack injected;
//   3. cross_edit merges the layout map into the target map; the target is
//      re-predicted with (only) that map injected;
//   4. blend masks are thresholded from this step's source/target maps.
// Pass the already-computed source prediction/capture when available to avoid
// a duplicate denoiser call.
UacEvaluation uac_evaluate(const Latent& z_src, const Latent& z_tgt, const Latent& z_lay, int t,
                           const Condition& c_src, const Condition& c_tgt,
                           const ConditionalDenoiser& denoiser, const UacConfig& config,
                           const Latent* precomputed_eps_src,
                           const AttentionCapture* precomputed_src_capture);

// One full controlled editing step from timestep t to t_next: the controlled
// predictions above, then the engine's own update rule — calibrated target
// initial from the refined prediction, all three branches re-noised with the
// caller's shared noise, masks blended into the advanced target.  Valid from
// the second loop iteration onward (the first step is uncontrolled; see
// infedit_run).  state.z_lay must be present.
struct UacStepResult {
    BranchState next;
    UacEvaluation eval;
};
UacStepResult uac_step(const BranchState& state, int t, int t_next, const Latent& shared_noise,
                       const Condition& c_src, const Condition& c_tgt,
                       const ConditionalDenoiser& denoiser, const UacConfig& config,
                       const VarianceSchedule& schedule);

// NoiseRefiner adapter: plugs the controlled step into infedit_run.
class UacRefiner : public NoiseRefiner {
public:
    explicit UacRefiner(UacConfig config) : config_(std::move(config)) {}

    bool wants_layout_branch() const override { return true; }
    bool wants_source_capture() const override { return true; }
    RefinerResult refine(const RefinerContext& ctx) override;

    const UacConfig& config() const { return config_; }

private:
    UacConfig config_;
};

}  // namespace infedit
