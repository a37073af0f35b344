#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace infedit {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major tensor of 64-bit reals. Every sampler kernel operates on
// these and rejects non-finite values at its boundary, so a NaN cannot travel
// silently between modules.
struct Latent {
    Shape shape;
    std::vector<double> data;

    Latent() = default;
    Latent(Shape s, std::vector<double> d);

    static Latent zeros(const Shape& s);
    static Latent full(const Shape& s, double value);

    std::size_t numel() const { return data.size(); }
    bool same_shape_as(const Latent& other) const { return shape == other.shape; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

void require_positive_shape(const Shape& shape, const char* context);
void require_same_shape(const Latent& a, const Latent& b, const char* context);
void require_finite(const Latent& a, const char* context);
bool all_finite(const Latent& a);

double max_abs(const Latent& a);
double max_abs_diff(const Latent& a, const Latent& b);
double mean_value(const Latent& a);
bool bitwise_equal(const Latent& a, const Latent& b);

}  // namespace infedit
