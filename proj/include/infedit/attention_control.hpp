#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "infedit/denoiser.hpp"
#include "infedit/latent.hpp"
#include "infedit/matrix.hpp"

namespace infedit {

// Scaled dot-product attention: M = softmax(Q K^T / sqrt(d)), output = M V.
// Returns both so callers can capture or edit the map.
struct AttentionResult {
    Matrix output;          // num_queries x value_dim
    CrossAttentionMap map;  // num_queries x num_keys, row-stochastic
};
AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v);

// Token alignment: for each target-token index, either the source-token index
// whose attention column should replace it, or nullopt to keep the target's
// own column.
struct AlignmentMap {
    std::vector<std::optional<std::size_t>> targets;

    static AlignmentMap identity(std::size_t n);
    static AlignmentMap none(std::size_t n);
    std::size_t size() const { return targets.size(); }
};

// Column-wise map edit: aligned target columns are replaced by the mapped
// source columns, unaligned columns keep the target's values.  The source
// must be row-stochastic (its columns are copied); the target only needs
// finite non-negative weights, so an already-refined map can be refined
// again.  The output is NOT renormalized (renormalizing would break
// idempotence), so its row sums may drift off 1 — it remains a valid set of
// non-negative finite weights.
CrossAttentionMap refine(const CrossAttentionMap& source, const CrossAttentionMap& target,
                         const AlignmentMap& align);

// Binary mask from an aggregated attention map: normalize by the max entry,
// then compare against the threshold.  An all-zero map yields the all-zero
// mask.  Threshold must be positive and finite; values above 1 select nothing
// because normalized entries never exceed 1.
Matrix threshold_mask(const Matrix& aggregated, double threshold);

// Mean over the selected token columns of a map -> per-pixel column vector.
Matrix token_column_mean(const CrossAttentionMap& map, const std::vector<std::size_t>& tokens);

// Masked latent blend with weight w = clamp(mask_tgt - mask_src, 0, 1):
//   result = (1 - w) * z_src + w * z_tgt,
// so every output value lies in the interval hull of the two inputs.  Masks
// hold one value per pixel and broadcast across leading (channel) dimensions:
// the latent's element count must be a multiple of the mask size.
Latent local_blend(const Latent& z_tgt, const Latent& z_src, const Matrix& mask_tgt,
                   const Matrix& mask_src);

// Phase switches for the two attention edits; timesteps at or above the
// threshold are the "early" (structure-preserving) phase.  Values live in
// [0, T+1]: 0 fires at every step, T+1 never fires.
struct ControlSchedule {
    int tau_cross = 0;
    int tau_self = 0;
};

// Early phase (t >= tau_cross): refine(layout, target, align); afterwards the
// target map passes through unchanged.
CrossAttentionMap cross_edit(const CrossAttentionMap& layout, const CrossAttentionMap& target,
                             const AlignmentMap& align, int t, int tau_cross);

// Early phase (t >= tau_self): the source pack unchanged; afterwards the
// target's queries walk over the source's keys/values.
SelfAttentionPack self_edit(const SelfAttentionPack& source, const SelfAttentionPack& target,
                            int t, int tau_self);

// Which tokens mark the edited region on each side, and the mask thresholds.
// Empty token sets on both sides disable blending entirely.
struct BlendSpec {
    std::vector<std::size_t> target_tokens;
    std::vector<std::size_t> source_tokens;
    double threshold_tgt = 0.3;
    double threshold_src = 0.3;

    bool active() const { return !target_tokens.empty() || !source_tokens.empty(); }
};

}  // namespace infedit
