#include "infedit/toy_attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "infedit/rng.hpp"

namespace infedit {

namespace {

Matrix random_matrix(RngStream stream, std::size_t rows, std::size_t cols, double scale) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = stream.normal() * scale;
    return m;
}

std::vector<double> random_vector(RngStream stream, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (double& x : v) x = stream.normal() * scale;
    return v;
}

}  // namespace

ToyAttentionDenoiser::ToyAttentionDenoiser(std::uint64_t seed, std::size_t grid_h,
                                           std::size_t grid_w, std::size_t token_dim,
                                           std::size_t num_tokens_max, VarianceSchedule schedule)
    : seed_(seed),
      grid_h_(grid_h),
      grid_w_(grid_w),
      token_dim_(token_dim),
      num_tokens_max_(num_tokens_max),
      schedule_(std::move(schedule)) {
    if (grid_h_ == 0 || grid_w_ == 0 || token_dim_ == 0 || num_tokens_max_ == 0) {
        throw std::invalid_argument("toy_attention_denoiser: grid, feature and token bounds must be positive");
    }
    const std::size_t p = num_pixels();
    const std::size_t d = token_dim_;
    const double mat_scale = 1.0 / std::sqrt(static_cast<double>(d));
    // Per-purpose streams keep the weight layout stable if one block is ever
    // resized: each tensor owns its stream.
    weights_.value_embed = random_vector(RngStream(derive_stream_seed(seed_, "toy/value_embed", 0)), d, 1.0);
    weights_.positional = random_matrix(RngStream(derive_stream_seed(seed_, "toy/positional", 0)), p, d, 0.5);
    weights_.time_embed = random_vector(RngStream(derive_stream_seed(seed_, "toy/time_embed", 0)), d, 0.5);
    weights_.self_q = random_matrix(RngStream(derive_stream_seed(seed_, "toy/self_q", 0)), d, d, mat_scale);
    weights_.self_k = random_matrix(RngStream(derive_stream_seed(seed_, "toy/self_k", 0)), d, d, mat_scale);
    weights_.self_v = random_matrix(RngStream(derive_stream_seed(seed_, "toy/self_v", 0)), d, d, mat_scale);
    weights_.cross_q = random_matrix(RngStream(derive_stream_seed(seed_, "toy/cross_q", 0)), d, d, mat_scale);
    weights_.cross_k = random_matrix(RngStream(derive_stream_seed(seed_, "toy/cross_k", 0)), d, d, mat_scale);
    weights_.cross_v = random_matrix(RngStream(derive_stream_seed(seed_, "toy/cross_v", 0)), d, d, mat_scale);
    weights_.head = random_vector(RngStream(derive_stream_seed(seed_, "toy/head", 0)), d, mat_scale);
}

Matrix ToyAttentionDenoiser::token_embeddings(const Condition& c) const {
    if (c.size() > num_tokens_max_) {
        throw std::invalid_argument("toy_attention_denoiser: condition has " +
                                    std::to_string(c.size()) + " tokens, maximum is " +
                                    std::to_string(num_tokens_max_));
    }
    Matrix e(c.size(), token_dim_);
    for (std::size_t i = 0; i < c.size(); ++i) {
        // Embedding depends only on (denoiser seed, token id).
        RngStream stream(derive_stream_seed(seed_, "toy/token", static_cast<std::uint64_t>(c.tokens[i])));
        for (std::size_t j = 0; j < token_dim_; ++j) e.at(i, j) = stream.normal();
    }
    return e;
}

Matrix ToyAttentionDenoiser::pixel_features(const Latent& z, int t) const {
    const std::size_t p = num_pixels();
    if (z.numel() != p) {
        throw std::invalid_argument("toy_attention_denoiser: latent has " +
                                    std::to_string(z.numel()) + " values, grid expects " +
                                    std::to_string(p));
    }
    const double tt = static_cast<double>(t) / static_cast<double>(schedule_.total_steps());
    Matrix f(p, token_dim_);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < token_dim_; ++j) {
            f.at(i, j) = z[i] * weights_.value_embed[j] + weights_.positional.at(i, j) +
                         tt * weights_.time_embed[j];
        }
    }
    return f;
}

Latent ToyAttentionDenoiser::forward(const Latent& z, int t, const Condition& c,
                                     const AttentionInjection* injection,
                                     AttentionCapture* capture) const {
    if (t < 1 || t > schedule_.total_steps()) {
        throw std::invalid_argument("toy_attention_denoiser: timestep " + std::to_string(t) +
                                    " outside [1, " + std::to_string(schedule_.total_steps()) + "]");
    }
    require_finite(z, "toy_attention_denoiser (z)");
    const std::size_t p = num_pixels();
    const std::size_t d = token_dim_;

    const Matrix f = pixel_features(z, t);

    // Self-attention block.  Injection replaces the projected Q/K/V wholesale.
    Matrix q = matmul(f, weights_.self_q);
    Matrix k = matmul(f, weights_.self_k);
    Matrix v = matmul(f, weights_.self_v);
    if (injection && injection->self_qkv) {
        const SelfAttentionPack& pack = *injection->self_qkv;
        if (pack.q.rows != p || pack.q.cols != d || pack.k.rows != p || pack.k.cols != d ||
            pack.v.rows != p || pack.v.cols != d) {
            throw std::invalid_argument(
                "toy_attention_denoiser: injected self-attention pack does not match " +
                std::to_string(p) + "x" + std::to_string(d));
        }
        q = pack.q;
        k = pack.k;
        v = pack.v;
    }
    const AttentionResult self_attn = attention(q, k, v);

    Matrix f2 = f;
    for (std::size_t i = 0; i < f2.data.size(); ++i) f2.data[i] += self_attn.output.data[i];

    // Cross-attention block against the token embeddings.  Injection replaces
    // the softmax map; keys/values always come from the condition.
    const Matrix tokens = token_embeddings(c);
    const Matrix kc = matmul(tokens, weights_.cross_k);
    const Matrix vc = matmul(tokens, weights_.cross_v);
    CrossAttentionMap cross_map;
    Matrix cross_out;
    if (injection && injection->cross_map) {
        cross_map = *injection->cross_map;
        if (cross_map.num_pixels() != p || cross_map.num_tokens() != c.size()) {
            throw std::invalid_argument("toy_attention_denoiser: injected cross map is " +
                                        std::to_string(cross_map.num_pixels()) + "x" +
                                        std::to_string(cross_map.num_tokens()) + ", expected " +
                                        std::to_string(p) + "x" + std::to_string(c.size()));
        }
        // Edited maps may carry non-unit row sums; they must still be sane weights.
        cross_map.require_valid_weights("toy_attention_denoiser (injected cross map)");
        cross_out = matmul(cross_map.weights, vc);
    } else {
        const Matrix qc = matmul(f2, weights_.cross_q);
        AttentionResult cross_attn = attention(qc, kc, vc);
        cross_map = std::move(cross_attn.map);
        cross_out = std::move(cross_attn.output);
    }

    Matrix f3 = f2;
    for (std::size_t i = 0; i < f3.data.size(); ++i) f3.data[i] += cross_out.data[i];

    Latent eps = Latent::zeros(z.shape);
    for (std::size_t i = 0; i < p; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += f3.at(i, j) * weights_.head[j];
        eps[i] = s;
    }
    require_finite(eps, "toy_attention_denoiser (result)");

    if (capture) {
        capture->self_qkv = SelfAttentionPack{std::move(q), std::move(k), std::move(v)};
        capture->cross_map = std::move(cross_map);
    }
    return eps;
}

Latent ToyAttentionDenoiser::predict(const Latent& z, int t, const Condition& c) const {
    return forward(z, t, c, nullptr, nullptr);
}

Latent ToyAttentionDenoiser::predict_captured(const Latent& z, int t, const Condition& c,
                                              AttentionCapture& capture) const {
    return forward(z, t, c, nullptr, &capture);
}

Latent ToyAttentionDenoiser::predict_injected(const Latent& z, int t, const Condition& c,
                                              const AttentionInjection& injection,
                                              AttentionCapture* capture) const {
    return forward(z, t, c, &injection, capture);
}

}  // namespace infedit
