#pragma once

#include <string>

#include "infedit/latent.hpp"

namespace infedit {

// Binary latent container, byte layout (all multi-byte values little-endian):
//
//   offset  size  field
//   0       4     magic "DLT1"
//   4       1     format version, currently 1
//   5       1     dtype code, 1 = float64
//   6       1     ndim (>= 1)
//   7       4*n   dims, uint32 each, all > 0
//   ...     8*N   payload, row-major float64, N = product(dims)
//
// Reads fail with distinct messages for a wrong magic, an unsupported
// version, an unsupported dtype, and a truncated or oversized payload (the
// latter naming expected vs actual byte counts).  Writes are deterministic:
// equal latents produce byte-identical files.
Latent read_latent(const std::string& path);
void write_latent(const std::string& path, const Latent& latent);

}  // namespace infedit
