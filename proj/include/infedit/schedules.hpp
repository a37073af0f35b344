#pragma once

#include <cstddef>
#include <vector>

namespace infedit {

// Cumulative signal coefficients of a diffusion noising process, indexed by
// integer timestep t in [0, T].  alpha_bar(0) == 1 exactly (a timestep-0
// latent is the clean signal); alpha_bar is strictly decreasing and stays in
// (0, 1) for t >= 1.  Immutable once constructed.
class VarianceSchedule {
public:
    VarianceSchedule(int total_steps, std::vector<double> alpha_bar);

    int total_steps() const { return total_steps_; }
    double alpha_bar(int t) const;
    double sqrt_alpha_bar(int t) const;
    double sqrt_one_minus_alpha_bar(int t) const;

private:
    void check_bounds(int t) const;

    int total_steps_;
    std::vector<double> alpha_bar_;
    std::vector<double> sqrt_alpha_bar_;
    std::vector<double> sqrt_one_minus_alpha_bar_;
};

// Linear per-step noise rates beta_1 = beta_start .. beta_T = beta_end,
// alpha_bar(t) = prod_{s<=t} (1 - beta_s).  Requires T >= 1 and
// 0 < beta_start <= beta_end < 1.
VarianceSchedule make_linear_schedule(int total_steps, double beta_start, double beta_end);

// Descending sampling timesteps tau_1 > tau_2 > ... , each in [1, T].
struct TimestepSequence {
    std::vector<int> taus;

    explicit TimestepSequence(std::vector<int> taus);
    std::size_t size() const { return taus.size(); }
    int operator[](std::size_t i) const { return taus[i]; }
};

// Evenly spaced ("leading") timesteps: tau_n = (T * (N - n + 1)) / N in exact
// integer arithmetic for n = 1..N-1, clamped to [1, T] and deduplicated, so
// tau_1 == T always.  Requires 2 <= N <= T + 1.
TimestepSequence make_timesteps(int total_steps, int num_steps);

}  // namespace infedit
