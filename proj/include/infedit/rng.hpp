#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "infedit/latent.hpp"

namespace infedit {

// Stable 64-bit key for an independent noise stream. Streams are addressed by
// (run seed, purpose tag, index) so any consumer can re-derive the exact same
// tensor later — this is what makes the shared-noise contract between the
// source and target branches checkable from the outside.
std::uint64_t derive_stream_seed(std::uint64_t run_seed, std::string_view purpose,
                                 std::uint64_t index);

// Deterministic stream of uniforms / standard normals. The normal generator is
// a fixed Box-Muller mapping over mt19937_64 output, so a given seed yields the
// same bit pattern on every standards-conforming build of this library.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform();  // [0, 1)
    double normal();   // N(0, 1)
    Latent normal_latent(const Shape& shape);
    void fill_normal(Latent& out);

private:
    std::mt19937_64 engine_;
};

// Hands out the (purpose, index)-keyed streams of one run.
class StreamFactory {
public:
    explicit StreamFactory(std::uint64_t run_seed) : run_seed_(run_seed) {}

    RngStream stream(std::string_view purpose, std::uint64_t index = 0) const {
        return RngStream(derive_stream_seed(run_seed_, purpose, index));
    }
    std::uint64_t run_seed() const { return run_seed_; }

private:
    std::uint64_t run_seed_;
};

}  // namespace infedit
