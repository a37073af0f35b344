#pragma once

#include "infedit/latent.hpp"

namespace infedit {

// Mean squared error over all elements; shapes must match.
double mse(const Latent& a, const Latent& b);

// 10 * log10(max_value^2 / mse).  Identical inputs (mse == 0) return
// +infinity as the sentinel; max_value must be > 0.
double psnr(const Latent& a, const Latent& b, double max_value);

// Mean structural similarity over non-overlapping 8x8 windows of two 2-D
// single-channel arrays with values scaled to [0, 1].  Stabilizers
// C1 = 0.01^2, C2 = 0.03^2; windows use population statistics; trailing
// pixels that do not fill a window are dropped.  When both window variances
// are below 1e-12 the contrast/structure factor is taken as 1 (flat regions
// compare by luminance alone).  Inputs smaller than one window are rejected.
double ssim(const Latent& a, const Latent& b);

}  // namespace infedit
