#include "infedit/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace infedit {

GaussianOracle::GaussianOracle(GaussianComponent component, VarianceSchedule schedule)
    : component_(std::move(component)), schedule_(std::move(schedule)) {
    require_finite(component_.mean, "GaussianOracle (mean)");
    if (!std::isfinite(component_.stddev) || component_.stddev < 0.0) {
        throw std::invalid_argument("GaussianOracle: stddev must be finite and >= 0");
    }
}

Latent GaussianOracle::posterior_mean(const Latent& z, int t) const {
    const double a_bar = schedule_.alpha_bar(t);
    const double sa = schedule_.sqrt_alpha_bar(t);
    const double s2 = component_.stddev * component_.stddev;
    const double k = sa * s2 / (a_bar * s2 + (1.0 - a_bar));
    Latent out = Latent::zeros(z.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double mu = component_.mean[i];
        out[i] = mu + k * (z[i] - sa * mu);
    }
    return out;
}

Latent GaussianOracle::predict(const Latent& z, int t, const Condition&) const {
    if (t < 1 || t > schedule_.total_steps()) {
        throw std::invalid_argument("gaussian_oracle: timestep " + std::to_string(t) +
                                    " outside [1, " + std::to_string(schedule_.total_steps()) +
                                    "] (the clean latent carries no noise to predict)");
    }
    require_same_shape(z, component_.mean, "gaussian_oracle");
    require_finite(z, "gaussian_oracle (z)");
    const Latent x0 = posterior_mean(z, t);
    const double sa = schedule_.sqrt_alpha_bar(t);
    const double sb = schedule_.sqrt_one_minus_alpha_bar(t);
    Latent out = Latent::zeros(z.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = (z[i] - sa * x0[i]) / sb;
    }
    require_finite(out, "gaussian_oracle (result)");
    return out;
}

ConditionalMixtureOracle::ConditionalMixtureOracle(std::vector<GaussianComponent> components,
                                                   VarianceSchedule schedule) {
    if (components.empty()) {
        throw std::invalid_argument("conditional_mixture_oracle: needs at least one component");
    }
    const Shape reference_shape = components.front().mean.shape;
    oracles_.reserve(components.size());
    for (auto& comp : components) {
        if (comp.mean.shape != reference_shape) {
            throw std::invalid_argument(
                "conditional_mixture_oracle: component means must share one shape");
        }
        oracles_.emplace_back(std::move(comp), schedule);
    }
}

const GaussianOracle& ConditionalMixtureOracle::component_oracle(std::size_t index) const {
    if (index >= oracles_.size()) {
        throw std::out_of_range("conditional_mixture_oracle: component index " +
                                std::to_string(index) + " out of range (have " +
                                std::to_string(oracles_.size()) + ")");
    }
    return oracles_[index];
}

Latent ConditionalMixtureOracle::predict(const Latent& z, int t, const Condition& c) const {
    const std::int64_t sel = c.tokens.front();
    if (sel < 0 || static_cast<std::size_t>(sel) >= oracles_.size()) {
        throw std::invalid_argument("conditional_mixture_oracle: first condition token " +
                                    std::to_string(sel) + " does not name a component (have " +
                                    std::to_string(oracles_.size()) + ")");
    }
    return oracles_[static_cast<std::size_t>(sel)].predict(z, t, c);
}

std::unique_ptr<GaussianOracle> gaussian_oracle(Latent mean, double stddev,
                                                const VarianceSchedule& schedule) {
    return std::make_unique<GaussianOracle>(GaussianComponent{std::move(mean), stddev}, schedule);
}

std::unique_ptr<ConditionalMixtureOracle> conditional_mixture_oracle(
    std::vector<GaussianComponent> components, const VarianceSchedule& schedule) {
    return std::make_unique<ConditionalMixtureOracle>(std::move(components), schedule);
}

}  // namespace infedit
