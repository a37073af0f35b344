#include "infedit/schedules.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace infedit {

VarianceSchedule::VarianceSchedule(int total_steps, std::vector<double> alpha_bar)
    : total_steps_(total_steps), alpha_bar_(std::move(alpha_bar)) {
    if (total_steps_ < 1) {
        throw std::invalid_argument("VarianceSchedule: total_steps must be >= 1, got " +
                                    std::to_string(total_steps_));
    }
    if (alpha_bar_.size() != static_cast<std::size_t>(total_steps_) + 1) {
        throw std::invalid_argument("VarianceSchedule: expected " +
                                    std::to_string(total_steps_ + 1) + " alpha_bar entries, got " +
                                    std::to_string(alpha_bar_.size()));
    }
    if (alpha_bar_[0] != 1.0) {
        throw std::invalid_argument("VarianceSchedule: alpha_bar[0] must be exactly 1");
    }
    for (int t = 1; t <= total_steps_; ++t) {
        const double a = alpha_bar_[static_cast<std::size_t>(t)];
        if (!std::isfinite(a) || a <= 0.0 || a >= 1.0) {
            throw std::invalid_argument("VarianceSchedule: alpha_bar[" + std::to_string(t) +
                                        "] = " + std::to_string(a) + " outside (0, 1)");
        }
        if (a >= alpha_bar_[static_cast<std::size_t>(t) - 1]) {
            throw std::invalid_argument("VarianceSchedule: alpha_bar not strictly decreasing at t = " +
                                        std::to_string(t));
        }
    }
    sqrt_alpha_bar_.resize(alpha_bar_.size());
    sqrt_one_minus_alpha_bar_.resize(alpha_bar_.size());
    for (std::size_t i = 0; i < alpha_bar_.size(); ++i) {
        sqrt_alpha_bar_[i] = std::sqrt(alpha_bar_[i]);
        sqrt_one_minus_alpha_bar_[i] = std::sqrt(1.0 - alpha_bar_[i]);
    }
}

void VarianceSchedule::check_bounds(int t) const {
    if (t < 0 || t > total_steps_) {
        throw std::out_of_range("VarianceSchedule: timestep " + std::to_string(t) +
                                " outside [0, " + std::to_string(total_steps_) + "]");
    }
}

double VarianceSchedule::alpha_bar(int t) const {
    check_bounds(t);
    return alpha_bar_[static_cast<std::size_t>(t)];
}

double VarianceSchedule::sqrt_alpha_bar(int t) const {
    check_bounds(t);
    return sqrt_alpha_bar_[static_cast<std::size_t>(t)];
}

double VarianceSchedule::sqrt_one_minus_alpha_bar(int t) const {
    check_bounds(t);
    return sqrt_one_minus_alpha_bar_[static_cast<std::size_t>(t)];
}

VarianceSchedule make_linear_schedule(int total_steps, double beta_start, double beta_end) {
    if (total_steps < 1) {
        throw std::invalid_argument("make_linear_schedule: total_steps must be >= 1");
    }
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start <= beta_end)) {
        throw std::invalid_argument("make_linear_schedule: need 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> alpha_bar(static_cast<std::size_t>(total_steps) + 1);
    alpha_bar[0] = 1.0;
    double prod = 1.0;
    for (int s = 1; s <= total_steps; ++s) {
        const double frac =
            (total_steps == 1) ? 0.0
                               : static_cast<double>(s - 1) / static_cast<double>(total_steps - 1);
        const double beta = beta_start + frac * (beta_end - beta_start);
        prod *= 1.0 - beta;
        alpha_bar[static_cast<std::size_t>(s)] = prod;
    }
    // The VarianceSchedule constructor re-validates; long schedules with
    // aggressive rates can underflow the product to zero and are rejected
    // there rather than producing a degenerate schedule.
    return VarianceSchedule(total_steps, std::move(alpha_bar));
}

TimestepSequence::TimestepSequence(std::vector<int> t) : taus(std::move(t)) {
    if (taus.empty()) {
        throw std::invalid_argument("TimestepSequence: needs at least one timestep");
    }
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (taus[i] < 1) {
            throw std::invalid_argument("TimestepSequence: timestep " + std::to_string(taus[i]) +
                                        " below 1");
        }
        if (i > 0 && taus[i] >= taus[i - 1]) {
            throw std::invalid_argument("TimestepSequence: not strictly decreasing at position " +
                                        std::to_string(i));
        }
    }
}

TimestepSequence make_timesteps(int total_steps, int num_steps) {
    if (total_steps < 1) {
        throw std::invalid_argument("make_timesteps: total_steps must be >= 1");
    }
    if (num_steps < 2 || num_steps > total_steps + 1) {
        throw std::invalid_argument("make_timesteps: num_steps must satisfy 2 <= N <= T + 1, got N = " +
                                    std::to_string(num_steps) + ", T = " +
                                    std::to_string(total_steps));
    }
    std::vector<int> taus;
    taus.reserve(static_cast<std::size_t>(num_steps) - 1);
    for (int n = 1; n <= num_steps - 1; ++n) {
        // Exact integer arithmetic; 64-bit so T * N cannot overflow.
        const std::int64_t raw = static_cast<std::int64_t>(total_steps) *
                                 static_cast<std::int64_t>(num_steps - n + 1) /
                                 static_cast<std::int64_t>(num_steps);
        int tau = static_cast<int>(raw);
        tau = std::max(1, std::min(total_steps, tau));
        if (taus.empty() || tau < taus.back()) {
            taus.push_back(tau);  // deduplicate collisions from the rounding
        }
    }
    if (taus.empty()) {
        throw std::invalid_argument("make_timesteps: sequence collapsed to zero length");
    }
    return TimestepSequence(std::move(taus));
}

}  // namespace infedit
