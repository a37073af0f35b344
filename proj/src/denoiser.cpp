#include "infedit/denoiser.hpp"

#include <cmath>

namespace infedit {

Condition::Condition(std::vector<std::int64_t> toks) : tokens(std::move(toks)) {
    if (tokens.empty()) {
        throw std::invalid_argument("Condition: token list must be non-empty");
    }
    // FNV-1a over the token bytes; stable across runs and platforms.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int64_t tok : tokens) {
        auto u = static_cast<std::uint64_t>(tok);
        for (int b = 0; b < 8; ++b) {
            h ^= (u >> (8 * b)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    }
    id = h;
}

void CrossAttentionMap::require_valid_weights(const char* context) const {
    if (weights.rows == 0 || weights.cols == 0) {
        throw std::invalid_argument(std::string(context) + ": empty cross-attention map");
    }
    for (double v : weights.data) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument(std::string(context) +
                                        ": cross-attention weight not finite and non-negative");
        }
    }
}

void CrossAttentionMap::require_row_stochastic(double tol, const char* context) const {
    require_valid_weights(context);
    for (std::size_t i = 0; i < weights.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < weights.cols; ++j) sum += weights.at(i, j);
        if (std::fabs(sum - 1.0) > tol) {
            throw std::invalid_argument(std::string(context) + ": row " + std::to_string(i) +
                                        " sums to " + std::to_string(sum) +
                                        ", expected 1 within " + std::to_string(tol));
        }
    }
}

Latent ConditionalDenoiser::predict_captured(const Latent&, int, const Condition&,
                                             AttentionCapture&) const {
    throw CapabilityError("denoiser '" + name() + "' does not support attention capture");
}

Latent ConditionalDenoiser::predict_injected(const Latent&, int, const Condition&,
                                             const AttentionInjection&, AttentionCapture*) const {
    throw CapabilityError("denoiser '" + name() + "' does not support attention injection");
}

}  // namespace infedit
