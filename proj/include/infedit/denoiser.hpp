#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "infedit/latent.hpp"
#include "infedit/matrix.hpp"

namespace infedit {

// Conditioning for a noise predictor: a non-empty list of opaque token ids
// plus a stable hash of them, usable as a cache / equality key.
struct Condition {
    std::vector<std::int64_t> tokens;
    std::uint64_t id = 0;

    explicit Condition(std::vector<std::int64_t> toks);
    std::size_t size() const { return tokens.size(); }
    bool operator==(const Condition& other) const { return tokens == other.tokens; }
};

// Pixel-by-token cross-attention weights.  Rows are softmax distributions
// when produced by an attention evaluation; edited maps may drift off unit
// row sums (see refine) and are only required to stay finite and
// non-negative.
struct CrossAttentionMap {
    Matrix weights;  // num_pixels x num_tokens

    CrossAttentionMap() = default;
    explicit CrossAttentionMap(Matrix w) : weights(std::move(w)) {}

    std::size_t num_pixels() const { return weights.rows; }
    std::size_t num_tokens() const { return weights.cols; }

    void require_row_stochastic(double tol, const char* context) const;
    void require_valid_weights(const char* context) const;  // finite, non-negative
};

// Projected queries/keys/values of one self-attention evaluation.
struct SelfAttentionPack {
    Matrix q, k, v;  // each num_pixels x head_dim
};

struct AttentionCapture {
    SelfAttentionPack self_qkv;
    CrossAttentionMap cross_map;
};

// Replacement values for a controlled evaluation; absent fields leave the
// denoiser's own computation in place.
struct AttentionInjection {
    std::optional<SelfAttentionPack> self_qkv;
    std::optional<CrossAttentionMap> cross_map;
};

// Thrown when capture/injection is requested from a denoiser that cannot
// honor it.  The message always names the denoiser.
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Noise predictor eps(z, t, c).  Implementations advertise capture/injection
// support; the default entry points refuse honestly instead of silently
// ignoring the request.
class ConditionalDenoiser {
public:
    virtual ~ConditionalDenoiser() = default;

    virtual std::string name() const = 0;
    virtual Latent predict(const Latent& z, int t, const Condition& c) const = 0;

    virtual bool supports_capture() const { return false; }
    virtual bool supports_inject() const { return false; }

    // Like predict, but also fills `capture` with the attention values the
    // evaluation actually used.
    virtual Latent predict_captured(const Latent& z, int t, const Condition& c,
                                    AttentionCapture& capture) const;

    // Evaluation with injected attention values; `capture`, when non-null, is
    // filled with the effective (post-injection) values.
    virtual Latent predict_injected(const Latent& z, int t, const Condition& c,
                                    const AttentionInjection& injection,
                                    AttentionCapture* capture) const;
};

}  // namespace infedit
