#include "infedit/attention_control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace infedit {

AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    if (q.cols == 0 || q.rows == 0 || k.rows == 0) {
        throw std::invalid_argument("attention: empty operand");
    }
    if (q.cols != k.cols) {
        throw std::invalid_argument("attention: query dim " + std::to_string(q.cols) +
                                    " != key dim " + std::to_string(k.cols));
    }
    if (v.rows != k.rows) {
        throw std::invalid_argument("attention: value count " + std::to_string(v.rows) +
                                    " != key count " + std::to_string(k.rows));
    }
    require_finite(q, "attention (q)");
    require_finite(k, "attention (k)");
    require_finite(v, "attention (v)");

    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
    Matrix logits(q.rows, k.rows);
    for (std::size_t i = 0; i < q.rows; ++i) {
        for (std::size_t j = 0; j < k.rows; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < q.cols; ++c) dot += q.at(i, c) * k.at(j, c);
            logits.at(i, j) = dot * scale;
        }
    }
    AttentionResult result;
    result.map = CrossAttentionMap(softmax_rows(logits));
    result.map.require_row_stochastic(1e-6, "attention (map)");
    result.output = matmul(result.map.weights, v);
    return result;
}

AlignmentMap AlignmentMap::identity(std::size_t n) {
    AlignmentMap a;
    a.targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) a.targets[i] = i;
    return a;
}

AlignmentMap AlignmentMap::none(std::size_t n) {
    AlignmentMap a;
    a.targets.assign(n, std::nullopt);
    return a;
}

CrossAttentionMap refine(const CrossAttentionMap& source, const CrossAttentionMap& target,
                         const AlignmentMap& align) {
    // The source must be genuine softmax weights: its columns are copied into
    // the result.  The target may itself be a refined map whose row sums have
    // drifted off 1 (that is what makes re-refinement — idempotence — legal),
    // so it is held to the weaker finite/non-negative contract.
    source.require_row_stochastic(1e-6, "refine (source)");
    target.require_valid_weights("refine (target)");
    if (source.num_pixels() != target.num_pixels()) {
        throw std::invalid_argument("refine: pixel counts disagree, " +
                                    std::to_string(source.num_pixels()) + " vs " +
                                    std::to_string(target.num_pixels()));
    }
    if (align.size() != target.num_tokens()) {
        throw std::invalid_argument("refine: alignment covers " + std::to_string(align.size()) +
                                    " tokens, target map has " +
                                    std::to_string(target.num_tokens()));
    }
    CrossAttentionMap out = target;
    for (std::size_t j = 0; j < align.size(); ++j) {
        if (!align.targets[j]) continue;
        const std::size_t sj = *align.targets[j];
        if (sj >= source.num_tokens()) {
            throw std::invalid_argument("refine: alignment target " + std::to_string(j) +
                                        " maps to source token " + std::to_string(sj) +
                                        ", source map has " + std::to_string(source.num_tokens()));
        }
        for (std::size_t i = 0; i < out.num_pixels(); ++i) {
            out.weights.at(i, j) = source.weights.at(i, sj);
        }
    }
    out.require_valid_weights("refine (result)");
    return out;
}

Matrix threshold_mask(const Matrix& aggregated, double threshold) {
    // A threshold above 1 is allowed and selects nothing (normalized values
    // never exceed 1); zero or below would select everything and is rejected.
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw std::invalid_argument("threshold_mask: threshold must be a positive finite value, got " +
                                    std::to_string(threshold));
    }
    require_finite(aggregated, "threshold_mask");
    double max_v = 0.0;
    for (double v : aggregated.data) {
        if (v < 0.0) {
            throw std::invalid_argument("threshold_mask: negative attention weight");
        }
        max_v = std::max(max_v, v);
    }
    Matrix mask(aggregated.rows, aggregated.cols);
    if (max_v == 0.0) return mask;  // nothing attended anywhere -> empty mask
    for (std::size_t i = 0; i < aggregated.data.size(); ++i) {
        mask.data[i] = (aggregated.data[i] / max_v >= threshold) ? 1.0 : 0.0;
    }
    return mask;
}

Matrix token_column_mean(const CrossAttentionMap& map, const std::vector<std::size_t>& tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("token_column_mean: empty token set");
    }
    map.require_valid_weights("token_column_mean");
    for (std::size_t j : tokens) {
        if (j >= map.num_tokens()) {
            throw std::invalid_argument("token_column_mean: token index " + std::to_string(j) +
                                        " out of range (map has " +
                                        std::to_string(map.num_tokens()) + ")");
        }
    }
    Matrix out(map.num_pixels(), 1);
    for (std::size_t i = 0; i < map.num_pixels(); ++i) {
        double s = 0.0;
        for (std::size_t j : tokens) s += map.weights.at(i, j);
        out.at(i, 0) = s / static_cast<double>(tokens.size());
    }
    return out;
}

Latent local_blend(const Latent& z_tgt, const Latent& z_src, const Matrix& mask_tgt,
                   const Matrix& mask_src) {
    require_same_shape(z_tgt, z_src, "local_blend");
    require_finite(z_tgt, "local_blend (z_tgt)");
    require_finite(z_src, "local_blend (z_src)");
    if (mask_tgt.numel() != mask_src.numel() || mask_tgt.numel() == 0) {
        throw std::invalid_argument("local_blend: mask sizes disagree or are empty");
    }
    const std::size_t pixels = mask_tgt.numel();
    if (z_tgt.numel() % pixels != 0) {
        throw std::invalid_argument("local_blend: latent with " + std::to_string(z_tgt.numel()) +
                                    " values cannot broadcast a " + std::to_string(pixels) +
                                    "-pixel mask");
    }
    require_finite(mask_tgt, "local_blend (mask_tgt)");
    require_finite(mask_src, "local_blend (mask_src)");

    Latent out = Latent::zeros(z_tgt.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const std::size_t p = i % pixels;
        double w = mask_tgt.data[p] - mask_src.data[p];
        w = std::clamp(w, 0.0, 1.0);
        out[i] = (1.0 - w) * z_src[i] + w * z_tgt[i];
    }
    return out;
}

CrossAttentionMap cross_edit(const CrossAttentionMap& layout, const CrossAttentionMap& target,
                             const AlignmentMap& align, int t, int tau_cross) {
    if (t >= tau_cross) {
        return refine(layout, target, align);
    }
    return target;
}

SelfAttentionPack self_edit(const SelfAttentionPack& source, const SelfAttentionPack& target,
                            int t, int tau_self) {
    if (!same_dims(source.q, target.q) || !same_dims(source.k, target.k) ||
        !same_dims(source.v, target.v)) {
        throw std::invalid_argument("self_edit: source/target pack dimensions disagree");
    }
    if (t >= tau_self) {
        return source;
    }
    return SelfAttentionPack{target.q, source.k, source.v};
}

}  // namespace infedit
