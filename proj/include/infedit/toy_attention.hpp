#pragma once

#include <cstdint>

#include "infedit/attention_control.hpp"
#include "infedit/denoiser.hpp"
#include "infedit/schedules.hpp"

namespace infedit {

// Deterministic attention-bearing noise predictor, built as a test fixture
// for attention control: small enough to brute-force in tests, structured
// enough to exercise capture and injection for real.
//
// Pipeline over a (grid_h * grid_w)-pixel latent with feature width d:
//   features  F[p]  = z[p] * value_embed + positional[p] + (t / T) * time_embed
//   self-attn       Q = F Wq, K = F Wk, V = F Wv; F2 = F + attention(Q, K, V)
//   cross-attn      Qc = F2 Wcq against token embeddings E (keys E Wck,
//                   values E Wcv); F3 = F2 + M Vc
//   head            eps[p] = <F3[p], head>
//
// All weights and per-token embeddings derive from the constructor seed, so
// equal seeds give bitwise-equal predictors.  Injecting the values an
// uncontrolled evaluation would compute reproduces that evaluation bitwise,
// because injected and computed values flow through the same code path.
class ToyAttentionDenoiser : public ConditionalDenoiser {
public:
    struct WeightSet {
        std::vector<double> value_embed;  // d
        Matrix positional;                // P x d
        std::vector<double> time_embed;   // d
        Matrix self_q, self_k, self_v;    // d x d
        Matrix cross_q;                   // d x d
        Matrix cross_k, cross_v;          // d x d, applied to token embeddings
        std::vector<double> head;         // d
    };

    ToyAttentionDenoiser(std::uint64_t seed, std::size_t grid_h, std::size_t grid_w,
                         std::size_t token_dim, std::size_t num_tokens_max,
                         VarianceSchedule schedule);

    std::string name() const override { return "toy_attention_denoiser"; }
    Latent predict(const Latent& z, int t, const Condition& c) const override;
    bool supports_capture() const override { return true; }
    bool supports_inject() const override { return true; }
    Latent predict_captured(const Latent& z, int t, const Condition& c,
                            AttentionCapture& capture) const override;
    Latent predict_injected(const Latent& z, int t, const Condition& c,
                            const AttentionInjection& injection,
                            AttentionCapture* capture) const override;

    // Introspection for brute-force verification in tests.
    const WeightSet& weights() const { return weights_; }
    Matrix token_embeddings(const Condition& c) const;          // m x d
    Matrix pixel_features(const Latent& z, int t) const;        // P x d
    std::size_t num_pixels() const { return grid_h_ * grid_w_; }
    std::size_t token_dim() const { return token_dim_; }
    std::size_t num_tokens_max() const { return num_tokens_max_; }

private:
    Latent forward(const Latent& z, int t, const Condition& c, const AttentionInjection* injection,
                   AttentionCapture* capture) const;

    std::uint64_t seed_;
    std::size_t grid_h_, grid_w_, token_dim_, num_tokens_max_;
    VarianceSchedule schedule_;
    WeightSet weights_;
};

}  // namespace infedit
