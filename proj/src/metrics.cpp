#include "infedit/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace infedit {

double mse(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "mse");
    require_finite(a, "mse (a)");
    require_finite(b, "mse (b)");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.numel());
}

double psnr(const Latent& a, const Latent& b, double max_value) {
    if (!(max_value > 0.0) || !std::isfinite(max_value)) {
        throw std::invalid_argument("psnr: max_value must be finite and > 0");
    }
    const double err = mse(a, b);
    if (err == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(max_value * max_value / err);
}

namespace {

constexpr std::size_t kWindow = 8;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kFlatVariance = 1e-12;

struct WindowStats {
    double mean_a, mean_b, var_a, var_b, cov;
};

WindowStats window_stats(const Latent& a, const Latent& b, std::size_t row0, std::size_t col0,
                         std::size_t width) {
    const double n = static_cast<double>(kWindow * kWindow);
    double sa = 0.0, sb = 0.0;
    for (std::size_t r = 0; r < kWindow; ++r) {
        for (std::size_t c = 0; c < kWindow; ++c) {
            const std::size_t idx = (row0 + r) * width + (col0 + c);
            sa += a[idx];
            sb += b[idx];
        }
    }
    const double ma = sa / n;
    const double mb = sb / n;
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (std::size_t r = 0; r < kWindow; ++r) {
        for (std::size_t c = 0; c < kWindow; ++c) {
            const std::size_t idx = (row0 + r) * width + (col0 + c);
            const double da = a[idx] - ma;
            const double db = b[idx] - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
        }
    }
    return {ma, mb, va / n, vb / n, cov / n};
}

}  // namespace

double ssim(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "ssim");
    require_finite(a, "ssim (a)");
    require_finite(b, "ssim (b)");
    if (a.shape.size() != 2) {
        throw std::invalid_argument("ssim: expects 2-D single-channel arrays, got shape " +
                                    shape_to_string(a.shape));
    }
    const std::size_t height = a.shape[0];
    const std::size_t width = a.shape[1];
    if (height < kWindow || width < kWindow) {
        throw std::invalid_argument("ssim: input " + shape_to_string(a.shape) +
                                    " smaller than one 8x8 window");
    }

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t row0 = 0; row0 + kWindow <= height; row0 += kWindow) {
        for (std::size_t col0 = 0; col0 + kWindow <= width; col0 += kWindow) {
            const WindowStats s = window_stats(a, b, row0, col0, width);
            const double luminance =
                (2.0 * s.mean_a * s.mean_b + kC1) / (s.mean_a * s.mean_a + s.mean_b * s.mean_b + kC1);
            double contrast_structure;
            if (s.var_a < kFlatVariance && s.var_b < kFlatVariance) {
                contrast_structure = 1.0;  // both windows flat: luminance decides
            } else {
                contrast_structure = (2.0 * s.cov + kC2) / (s.var_a + s.var_b + kC2);
            }
            total += luminance * contrast_structure;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace infedit
