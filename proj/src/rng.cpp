#include "infedit/rng.hpp"

#include <cmath>

namespace infedit {

namespace {

// splitmix64 finalizer; solid avalanche, cheap, and stable across platforms.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t run_seed, std::string_view purpose,
                                 std::uint64_t index) {
    // FNV-1a over the purpose tag, folded together with the run seed and the
    // step index through splitmix64.  Purpose tags keep logically distinct
    // noises (terminal draw, per-step shared noise, synthetic inputs, ...) on
    // non-overlapping streams even when they share a step index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = mix64(run_seed);
    s = mix64(s ^ h);
    s = mix64(s ^ index);
    return s;
}

double RngStream::uniform() {
    // 53 random bits -> double in [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    // Box-Muller, cosine branch only.  Each normal consumes exactly two engine
    // words; u1 is shifted into (0, 1] so the log never sees zero.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

Latent RngStream::normal_latent(const Shape& shape) {
    Latent out = Latent::zeros(shape);
    fill_normal(out);
    return out;
}

void RngStream::fill_normal(Latent& out) {
    for (double& v : out.data) v = normal();
}

}  // namespace infedit
