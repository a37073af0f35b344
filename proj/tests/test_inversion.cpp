#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "infedit/diffusion.hpp"
#include "infedit/inversion.hpp"
#include "infedit/rng.hpp"

#include "test_util.hpp"

using namespace infedit;
using infedit::test::tiny_schedule;

TEST_CASE("epsilon_cons: worked example at alpha_bar = 0.36") {
    const Latent z_t = Latent::full({1}, 1.0);
    const Latent z0 = Latent::full({1}, 0.5);
    const Latent eps = epsilon_cons(z_t, 3, z0, tiny_schedule());
    CHECK(eps[0] == doctest::Approx(0.875).epsilon(1e-14));
}

TEST_CASE("epsilon_cons: a noiseless latent yields exactly zero") {
    // z_t built as sqrt(alpha_bar) * z0 with the schedule's own factor: the
    // numerator cancels bitwise.
    const VarianceSchedule& s = tiny_schedule();
    StreamFactory rng(21);
    const Latent z0 = rng.stream("z0").normal_latent({2, 3});
    for (int t = 1; t <= 4; ++t) {
        Latent z_t = Latent::zeros(z0.shape);
        for (std::size_t i = 0; i < z_t.numel(); ++i) {
            z_t[i] = s.sqrt_alpha_bar(t) * z0[i];
        }
        const Latent eps = epsilon_cons(z_t, t, z0, s);
        CHECK(max_abs(eps) == 0.0);
    }
}

TEST_CASE("epsilon_cons recovers the noise that forward_noise injected") {
    const VarianceSchedule& big = infedit::test::schedule1000();
    StreamFactory rng(22);
    RngStream stream = rng.stream("cons");
    for (int rep = 0; rep < 100; ++rep) {
        const int t = infedit::test::int_in(stream, 1, 1000);
        const Latent z0 = stream.normal_latent({2, 2});
        const Latent eps = stream.normal_latent({2, 2});
        const Latent back = epsilon_cons(forward_noise(z0, t, eps, big), t, z0, big);
        CHECK(max_abs_diff(back, eps) <= 1e-12);
    }
}

TEST_CASE("epsilon_cons: guards the near-clean cancellation region") {
    const Latent z = Latent::zeros({1});
    CHECK_THROWS_AS(epsilon_cons(z, 0, z, tiny_schedule()), std::invalid_argument);
    // alpha_bar(1) within 1e-12 of 1 must be refused, not divided by ~0.
    const VarianceSchedule nearly_clean(1, {1.0, 1.0 - 1e-13});
    CHECK_THROWS_AS(epsilon_cons(z, 1, z, nearly_clean), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_cons(z, 9, z, tiny_schedule()), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_cons(z, 1, Latent::zeros({2}), tiny_schedule()),
                    std::invalid_argument);
}

TEST_CASE("virtual_invert: reconstruction is exact for random inputs and ladder sizes") {
    const VarianceSchedule& big = infedit::test::schedule1000();
    StreamFactory rng(23);
    RngStream data = rng.stream("data");
    for (int rep = 0; rep < 10; ++rep) {
        for (int n : {2, 8}) {
            const Latent z0 = data.normal_latent({2, 4, 4});
            RngStream noise = rng.stream("noise", static_cast<std::uint64_t>(rep * 10 + n));
            const InversionResult res =
                virtual_invert(z0, make_timesteps(1000, n), big, noise);
            CHECK(max_abs_diff(res.z, z0) <= 1e-12);
        }
    }
}

TEST_CASE("virtual_invert: the result does not depend on the noise stream") {
    const VarianceSchedule& big = infedit::test::schedule1000();
    StreamFactory rng(24);
    const Latent z0 = rng.stream("data").normal_latent({3, 3});
    const TimestepSequence taus = make_timesteps(1000, 12);
    RngStream a = rng.stream("noise", 0);
    RngStream b = rng.stream("noise", 1);
    const Latent za = virtual_invert(z0, taus, big, a).z;
    const Latent zb = virtual_invert(z0, taus, big, b).z;
    CHECK(max_abs_diff(za, zb) <= 1e-12);
}

TEST_CASE("virtual_invert: trace steps are internally consistent and exact") {
    const VarianceSchedule& big = infedit::test::schedule1000();
    StreamFactory rng(25);
    const Latent z0 = rng.stream("data").normal_latent({4});
    RngStream noise = rng.stream("noise");
    const TimestepSequence taus = make_timesteps(1000, 6);
    const InversionResult res = virtual_invert(z0, taus, big, noise, 1);
    REQUIRE(res.trace.steps.size() == taus.size());
    for (std::size_t i = 0; i < res.trace.steps.size(); ++i) {
        const InversionTraceStep& step = res.trace.steps[i];
        CHECK(step.step_index == static_cast<int>(i) + 1);
        CHECK(step.timestep == taus[i]);
        // Recorded fields satisfy the defining equations bitwise.
        CHECK(bitwise_equal(step.eps_cons,
                            epsilon_cons(step.z_noised, step.timestep, z0, big)));
        CHECK(bitwise_equal(step.z,
                            predict_x0(step.z_noised, step.timestep, step.eps_cons, big)));
        // Every per-step reconstruction already sits on the reference.
        CHECK(max_abs_diff(step.z, z0) <= 1e-12);
    }
}

TEST_CASE("virtual_invert: stride thins the trace but always keeps the last step") {
    const VarianceSchedule& big = infedit::test::schedule1000();
    StreamFactory rng(26);
    const Latent z0 = rng.stream("data").normal_latent({2});
    RngStream noise = rng.stream("noise");
    const TimestepSequence taus = make_timesteps(1000, 8);  // 7 steps
    const InversionResult res = virtual_invert(z0, taus, big, noise, 3);
    // Steps 1, 4, 7 by stride plus the final step 7 (already included).
    REQUIRE(res.trace.steps.size() == 3);
    CHECK(res.trace.steps[0].step_index == 1);
    CHECK(res.trace.steps[1].step_index == 4);
    CHECK(res.trace.steps[2].step_index == 7);
    CHECK(res.trace.stride == 3);

    RngStream noise2 = rng.stream("noise");
    CHECK_THROWS_AS(virtual_invert(z0, taus, big, noise2, 0), std::invalid_argument);
}

TEST_CASE("virtual_invert: noised latents match the forward marginal moments") {
    // After the first step the running estimate equals z0 up to rounding, so
    // the re-noised latent at the second rung is distributed as the forward
    // marginal sqrt(a) z0 + sqrt(1-a) N(0,1).  Check mean and variance over
    // many seeds within four standard errors.
    const VarianceSchedule& big = infedit::test::schedule1000();
    const Latent z0 = Latent::full({1}, 1.7);
    const TimestepSequence taus = TimestepSequence({800, 400});
    const double a = big.alpha_bar(400);
    const int n = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int seed = 0; seed < n; ++seed) {
        RngStream noise = StreamFactory(9000 + seed).stream("inversion");
        const InversionResult res = virtual_invert(z0, taus, big, noise, 1);
        const double v = res.trace.steps[1].z_noised[0];
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double want_mean = std::sqrt(a) * 1.7;
    const double want_var = 1.0 - a;
    CHECK(std::abs(mean - want_mean) <= 4.0 * std::sqrt(want_var / n));
    CHECK(std::abs(var - want_var) <= 4.0 * want_var * std::sqrt(2.0 / n));
}
