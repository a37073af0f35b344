#include "infedit/latent.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace infedit {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Latent::Latent(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    require_positive_shape(shape, "Latent");
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument("Latent: shape " + shape_to_string(shape) + " expects " +
                                    std::to_string(shape_numel(shape)) + " values, got " +
                                    std::to_string(data.size()));
    }
}

Latent Latent::zeros(const Shape& s) {
    require_positive_shape(s, "Latent::zeros");
    return Latent(s, std::vector<double>(shape_numel(s), 0.0));
}

Latent Latent::full(const Shape& s, double value) {
    require_positive_shape(s, "Latent::full");
    return Latent(s, std::vector<double>(shape_numel(s), value));
}

void require_positive_shape(const Shape& shape, const char* context) {
    if (shape.empty()) {
        throw std::invalid_argument(std::string(context) + ": shape must have at least one dimension");
    }
    for (std::size_t d : shape) {
        if (d == 0) {
            throw std::invalid_argument(std::string(context) + ": shape " + shape_to_string(shape) +
                                        " has a zero dimension");
        }
    }
}

void require_same_shape(const Latent& a, const Latent& b, const char* context) {
    if (!a.same_shape_as(b)) {
        throw std::invalid_argument(std::string(context) + ": shape mismatch " +
                                    shape_to_string(a.shape) + " vs " + shape_to_string(b.shape));
    }
}

bool all_finite(const Latent& a) {
    for (double v : a.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_finite(const Latent& a, const char* context) {
    if (!all_finite(a)) {
        throw std::invalid_argument(std::string(context) + ": latent contains a non-finite value");
    }
}

double max_abs(const Latent& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

double max_abs_diff(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    }
    return m;
}

double mean_value(const Latent& a) {
    if (a.data.empty()) return 0.0;
    double s = 0.0;
    for (double v : a.data) s += v;
    return s / static_cast<double>(a.data.size());
}

bool bitwise_equal(const Latent& a, const Latent& b) {
    if (!a.same_shape_as(b)) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace infedit
