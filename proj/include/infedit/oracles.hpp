#pragma once

#include <memory>
#include <vector>

#include "infedit/denoiser.hpp"
#include "infedit/schedules.hpp"

namespace infedit {

// One Gaussian data component N(mean, stddev^2 I).
struct GaussianComponent {
    Latent mean;
    double stddev = 0.0;  // >= 0; 0 is the point mass
};

// Bayes-exact noise predictor for data drawn from a single isotropic
// Gaussian.  With a_t = alpha_bar(t) and the forward relation
// z_t = sqrt(a_t) z0 + sqrt(1 - a_t) eps:
//
//   E[z0 | z_t] = mean + k (z_t - sqrt(a_t) mean),
//   k           = sqrt(a_t) s^2 / (a_t s^2 + 1 - a_t),
//   eps*(z_t,t) = (z_t - sqrt(a_t) E[z0 | z_t]) / sqrt(1 - a_t).
//
// The condition is accepted but ignored.  Rejects t = 0 (no noise to
// predict).  No capture/injection support.
class GaussianOracle : public ConditionalDenoiser {
public:
    GaussianOracle(GaussianComponent component, VarianceSchedule schedule);

    std::string name() const override { return "gaussian_oracle"; }
    Latent predict(const Latent& z, int t, const Condition& c) const override;

    // Posterior mean of the clean latent; exposed for oracle-level tests.
    Latent posterior_mean(const Latent& z, int t) const;

private:
    GaussianComponent component_;
    VarianceSchedule schedule_;
};

// Mixture of Gaussian components where the condition's FIRST token selects
// the component: the predictor is the single-component oracle of that
// component.  Out-of-range component indices are rejected.
class ConditionalMixtureOracle : public ConditionalDenoiser {
public:
    ConditionalMixtureOracle(std::vector<GaussianComponent> components, VarianceSchedule schedule);

    std::string name() const override { return "conditional_mixture_oracle"; }
    Latent predict(const Latent& z, int t, const Condition& c) const override;

    std::size_t num_components() const { return oracles_.size(); }
    const GaussianOracle& component_oracle(std::size_t index) const;

private:
    std::vector<GaussianOracle> oracles_;
};

std::unique_ptr<GaussianOracle> gaussian_oracle(Latent mean, double stddev,
                                                const VarianceSchedule& schedule);
std::unique_ptr<ConditionalMixtureOracle> conditional_mixture_oracle(
    std::vector<GaussianComponent> components, const VarianceSchedule& schedule);

}  // namespace infedit
