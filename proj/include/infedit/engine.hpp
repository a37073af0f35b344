#pragma once

#include <optional>
#include <vector>

#include "infedit/attention_control.hpp"
#include "infedit/denoiser.hpp"
#include "infedit/diffusion.hpp"
#include "infedit/inversion.hpp"
#include "infedit/latent.hpp"
#include "infedit/rng.hpp"
#include "infedit/schedules.hpp"

namespace infedit {

// Snapshot of one editing step: the branch latents as the predictors saw them
// at `timestep`, plus the target initial recalibrated by that step.
struct BranchState {
    Latent z_src;                 // source branch latent at `timestep`
    Latent z_tgt;                 // target branch latent at `timestep`
    std::optional<Latent> z_lay;  // layout branch latent (attention control only)
    Latent z0_src;                // immutable reference initial
    Latent z0_tgt;                // calibrated target initial after this step
    int step_index = 0;           // 1-based position in the timestep sequence
    int timestep = 0;
};

// Binary per-pixel masks for the post-step latent blend.
struct BlendMasks {
    Matrix mask_tgt;
    Matrix mask_src;
};

struct RefinerContext {
    const BranchState& state;  // latents at time t; z0_tgt is the pre-update value
    int t;
    const Condition& c_src;
    const Condition& c_tgt;
    const ConditionalDenoiser& denoiser;
    const VarianceSchedule& schedule;
    const Latent& eps_src;                  // source prediction already computed
    const AttentionCapture* source_capture; // non-null iff wants_source_capture()
};

struct RefinerResult {
    Latent eps_tgt;                    // (possibly refined) target noise prediction
    std::optional<Latent> eps_lay;     // layout branch prediction, when one is kept
    std::optional<BlendMasks> blend;   // masks from this step's attention maps
};

// Hook that produces the target branch's noise prediction each step (from the
// second step onward; the first step always uses the plain prediction).  It
// may call the denoiser for the target/layout branches; the source prediction
// is handed in.
class NoiseRefiner {
public:
    virtual ~NoiseRefiner() = default;
    virtual bool wants_layout_branch() const { return false; }
    virtual bool wants_source_capture() const { return false; }
    virtual RefinerResult refine(const RefinerContext& ctx) = 0;
};

// The uncontrolled baseline: the denoiser's own target prediction.
class TrivialRefiner : public NoiseRefiner {
public:
    RefinerResult refine(const RefinerContext& ctx) override;
};

// Target-initial update: f(z_tgt, t, eps_tgt - eps_src + eps_cons).
Latent calibrated_initial(const Latent& z_tgt_t, int t, const Latent& eps_tgt,
                          const Latent& eps_src, const Latent& eps_cons,
                          const VarianceSchedule& schedule);

// Re-noises all branch initials to t_next with ONE shared noise tensor (the
// shared-noise contract), then applies the optional masked blend to the
// target.  t_next == 0 returns the initials themselves.
struct AdvancedBranches {
    Latent z_src;
    Latent z_tgt;
    std::optional<Latent> z_lay;
};
AdvancedBranches advance_branches(const Latent& z0_src, const Latent& z0_tgt,
                                  const std::optional<Latent>& z0_lay, int t_next,
                                  const Latent& shared_noise,
                                  const std::optional<BlendMasks>& blend,
                                  const VarianceSchedule& schedule);

struct EditStepStats {
    int step_index = 0;
    int timestep = 0;
    double max_abs_z0_diff = 0.0;   // |z0_tgt - z0_src| after the step
    double max_abs_eps_diff = 0.0;  // |eps_tgt - eps_src| at the step
};

struct EditResult {
    Latent z0_tgt;                   // final edited latent
    std::vector<BranchState> states; // one snapshot per step
    std::vector<EditStepStats> stats;
};

// Inversion-free editing loop:
//   - one terminal noise draw shared by every branch (stream "terminal"/0);
//   - per step: source prediction, consistent noise in closed form, target
//     prediction through the refiner (plain on the first step), calibrated
//     target-initial update;
//   - branches then advance to the next timestep with one shared fresh noise
//     (stream "shared"/step_index), and the refiner's masks, if any, blend
//     the advanced target with the advanced source.
// The final advance goes to t = 0, so the returned latent is the last
// calibrated initial with any final blend applied.
EditResult infedit_run(const Latent& z0_src, const Condition& c_src, const Condition& c_tgt,
                       const ConditionalDenoiser& denoiser, const TimestepSequence& taus,
                       const VarianceSchedule& schedule, NoiseRefiner& refiner,
                       const StreamFactory& rng);

}  // namespace infedit
