#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "infedit/engine.hpp"
#include "infedit/inversion.hpp"
#include "infedit/oracles.hpp"
#include "infedit/toy_attention.hpp"

#include "test_util.hpp"

using namespace infedit;
using infedit::test::schedule1000;
using infedit::test::tiny_schedule;

namespace {

// Delegates to a wrapped oracle but throws on one (timestep, condition) pair,
// to exercise the engine's error context wrapping.
class ThrowingDenoiser : public ConditionalDenoiser {
public:
    ThrowingDenoiser(const ConditionalDenoiser& inner, int trip_t, Condition trip_c)
        : inner_(inner), trip_t_(trip_t), trip_c_(std::move(trip_c)) {}

    std::string name() const override { return "throwing"; }
    Latent predict(const Latent& z, int t, const Condition& c) const override {
        if (t == trip_t_ && c == trip_c_) throw std::runtime_error("boom");
        return inner_.predict(z, t, c);
    }

private:
    const ConditionalDenoiser& inner_;
    int trip_t_;
    Condition trip_c_;
};

// Declares a layout branch but never returns one: breaks the refiner contract.
class BrokenLayoutRefiner : public NoiseRefiner {
public:
    bool wants_layout_branch() const override { return true; }
    RefinerResult refine(const RefinerContext& ctx) override {
        RefinerResult out;
        out.eps_tgt = ctx.denoiser.predict(ctx.state.z_tgt, ctx.t, ctx.c_tgt);
        return out;
    }
};

// Plain predictions plus constant equal masks, which make the blend copy the
// advanced source over the advanced target (weight = clamp(1 - 1, 0, 1) = 0).
class SourceCopyBlendRefiner : public NoiseRefiner {
public:
    explicit SourceCopyBlendRefiner(std::size_t numel) : numel_(numel) {}
    RefinerResult refine(const RefinerContext& ctx) override {
        RefinerResult out;
        out.eps_tgt = ctx.denoiser.predict(ctx.state.z_tgt, ctx.t, ctx.c_tgt);
        out.blend = BlendMasks{Matrix::full(numel_, 1, 1.0), Matrix::full(numel_, 1, 1.0)};
        return out;
    }

private:
    std::size_t numel_;
};

}  // namespace

TEST_CASE("calibrated_initial combines the three predictions into one x0 estimate") {
    const VarianceSchedule& sched = tiny_schedule();
    StreamFactory rng(90);
    RngStream stream = rng.stream("cal");
    const Shape shape{2, 3};
    const Latent z = stream.normal_latent(shape);
    const Latent e_tgt = stream.normal_latent(shape);
    const Latent e_src = stream.normal_latent(shape);
    const Latent e_cons = stream.normal_latent(shape);

    const Latent got = calibrated_initial(z, 2, e_tgt, e_src, e_cons, sched);
    // Scalar recomputation at alpha_bar(2) = 0.5.
    for (std::size_t i = 0; i < z.numel(); ++i) {
        const double combined = e_tgt[i] - e_src[i] + e_cons[i];
        const double expect = (z[i] - std::sqrt(0.5) * combined) / std::sqrt(0.5);
        CHECK(got[i] == doctest::Approx(expect).epsilon(1e-14));
    }
    // And exactly the predicted-x0 of the combined noise.
    Latent combined = Latent::zeros(shape);
    for (std::size_t i = 0; i < combined.numel(); ++i) {
        combined[i] = e_tgt[i] - e_src[i] + e_cons[i];
    }
    CHECK(bitwise_equal(got, predict_x0(z, 2, combined, sched)));

    CHECK_THROWS_AS(calibrated_initial(z, 2, Latent::zeros({5}), e_src, e_cons, sched),
                    std::invalid_argument);
}

TEST_CASE("advance_branches: shared noise, optional layout branch, terminal identity") {
    const VarianceSchedule& sched = tiny_schedule();
    StreamFactory rng(91);
    RngStream stream = rng.stream("adv");
    const Shape shape{4};
    const Latent a = stream.normal_latent(shape);
    const Latent b = stream.normal_latent(shape);
    const Latent lay = stream.normal_latent(shape);
    const Latent noise = stream.normal_latent(shape);

    SUBCASE("a positive target timestep re-noises every branch with the one tensor") {
        const AdvancedBranches adv =
            advance_branches(a, b, lay, 2, noise, std::nullopt, sched);
        CHECK(bitwise_equal(adv.z_src, forward_noise(a, 2, noise, sched)));
        CHECK(bitwise_equal(adv.z_tgt, forward_noise(b, 2, noise, sched)));
        REQUIRE(adv.z_lay.has_value());
        CHECK(bitwise_equal(*adv.z_lay, forward_noise(lay, 2, noise, sched)));
        CHECK(adv.z_src[0] ==
              doctest::Approx(std::sqrt(0.5) * a[0] + std::sqrt(0.5) * noise[0]).epsilon(1e-14));
    }
    SUBCASE("timestep zero returns the initials unchanged") {
        const AdvancedBranches adv =
            advance_branches(a, b, std::nullopt, 0, Latent::zeros(shape), std::nullopt, sched);
        CHECK(bitwise_equal(adv.z_src, a));
        CHECK(bitwise_equal(adv.z_tgt, b));
        CHECK(!adv.z_lay.has_value());
    }
    SUBCASE("blend masks rewrite the advanced target from the advanced source") {
        // Equal masks give blend weight 0 everywhere: the target becomes the source.
        const BlendMasks masks{Matrix::full(4, 1, 1.0), Matrix::full(4, 1, 1.0)};
        const AdvancedBranches adv = advance_branches(a, b, std::nullopt, 2, noise, masks, sched);
        CHECK(bitwise_equal(adv.z_tgt, adv.z_src));
    }
}

TEST_CASE("identity edit is a fixpoint for oracle, mixture and toy denoisers") {
    const Shape shape{2, 2};
    const Condition cond{{0}};
    struct Case {
        const char* label;
        std::unique_ptr<ConditionalDenoiser> denoiser;
        const VarianceSchedule* sched;
        std::vector<int> taus;
    };
    std::vector<Case> cases;
    cases.push_back({"gaussian", gaussian_oracle(Latent::full(shape, 0.4), 0.8, schedule1000()),
                     &schedule1000(), {900, 600, 300, 50}});
    {
        std::vector<GaussianComponent> comps;
        comps.push_back({Latent::full(shape, -1.0), 0.5});
        comps.push_back({Latent::full(shape, 1.0), 0.5});
        cases.push_back({"mixture", conditional_mixture_oracle(std::move(comps), schedule1000()),
                         &schedule1000(), {900, 600, 300, 50}});
    }
    cases.push_back({"toy",
                     std::make_unique<ToyAttentionDenoiser>(11, 2, 2, 3, 8, tiny_schedule()),
                     &tiny_schedule(), {4, 3, 2, 1}});

    for (const Case& tc : cases) {
        CAPTURE(tc.label);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            StreamFactory rng(3000 + seed);
            RngStream stream = rng.stream("init");
            const Latent z0 = stream.normal_latent(shape);
            TrivialRefiner refiner;
            const EditResult result = infedit_run(z0, cond, cond, *tc.denoiser,
                                                  TimestepSequence(tc.taus), *tc.sched, refiner,
                                                  StreamFactory(7000 + seed));
            CHECK(max_abs_diff(result.z0_tgt, z0) <= 1e-9);
            // Identical branches at the first step mean identical predictions.
            CHECK(result.stats.front().max_abs_eps_diff == 0.0);
            for (const EditStepStats& s : result.stats) {
                CHECK(s.max_abs_z0_diff <= 1e-9);
            }
        }
    }
}

TEST_CASE("edit run bookkeeping: terminal draw, shared per-step noise, immutable source") {
    const VarianceSchedule& sched = schedule1000();
    const Shape shape{3, 2};
    const auto oracle = gaussian_oracle(Latent::full(shape, 0.2), 0.9, sched);
    const Condition cond{{0}};
    const TimestepSequence taus({800, 550, 300, 120});

    StreamFactory rng(4321);
    StreamFactory init(99);
    RngStream stream = init.stream("init");
    const Latent z0 = stream.normal_latent(shape);
    TrivialRefiner refiner;
    const EditResult result = infedit_run(z0, cond, cond, *oracle, taus, sched, refiner, rng);

    REQUIRE(result.states.size() == taus.size());
    REQUIRE(result.stats.size() == taus.size());

    const Latent terminal = rng.stream("terminal", 0).normal_latent(shape);
    CHECK(bitwise_equal(result.states[0].z_src, terminal));
    CHECK(bitwise_equal(result.states[0].z_tgt, terminal));

    for (std::size_t i = 0; i < taus.size(); ++i) {
        const BranchState& st = result.states[i];
        CHECK(st.step_index == static_cast<int>(i) + 1);
        CHECK(st.timestep == taus[i]);
        CHECK(bitwise_equal(st.z0_src, z0));
        CHECK(!st.z_lay.has_value());
        CHECK(result.stats[i].max_abs_z0_diff == max_abs_diff(st.z0_tgt, z0));
        if (i >= 1) {
            // Both branches re-noised from their initials with the one shared
            // draw of the previous step (indexed by its 1-based position).
            const Latent shared = rng.stream("shared", i).normal_latent(shape);
            CHECK(bitwise_equal(st.z_src, forward_noise(z0, taus[i], shared, sched)));
            CHECK(bitwise_equal(
                st.z_tgt, forward_noise(result.states[i - 1].z0_tgt, taus[i], shared, sched)));
        }
    }
    // The final advance goes to t = 0, so the result is the last calibration.
    CHECK(bitwise_equal(result.z0_tgt, result.states.back().z0_tgt));
}

TEST_CASE("single-step edit run reduces to one calibration in closed form") {
    const VarianceSchedule& sched = tiny_schedule();
    const ToyAttentionDenoiser toy(5, 2, 2, 3, 8, sched);
    const Condition c_src{{1, 2}};
    const Condition c_tgt{{3, 4}};
    const Shape shape{2, 2};
    StreamFactory init(123);
    RngStream stream = init.stream("init");
    const Latent z0 = stream.normal_latent(shape);

    StreamFactory rng(77);
    TrivialRefiner refiner;
    const EditResult result =
        infedit_run(z0, c_src, c_tgt, toy, TimestepSequence({3}), sched, refiner, rng);

    const Latent z_T = rng.stream("terminal", 0).normal_latent(shape);
    const Latent eps_src = toy.predict(z_T, 3, c_src);
    const Latent eps_tgt = toy.predict(z_T, 3, c_tgt);
    const Latent eps_cons = epsilon_cons(z_T, 3, z0, sched);
    const Latent expect = calibrated_initial(z_T, 3, eps_tgt, eps_src, eps_cons, sched);
    CHECK(bitwise_equal(result.z0_tgt, expect));
    REQUIRE(result.states.size() == 1);
    CHECK(bitwise_equal(result.states[0].z0_tgt, expect));
    CHECK(result.stats[0].max_abs_eps_diff == max_abs_diff(eps_tgt, eps_src));
}

TEST_CASE("editing between point-mass components lands on the target mean") {
    // Source data sits exactly at -2, the edit asks for the +2 component; the
    // exact predictors make every calibration land on +2 up to rounding.
    const VarianceSchedule& sched = schedule1000();
    const Shape shape{2, 3};
    std::vector<GaussianComponent> comps;
    comps.push_back({Latent::full(shape, -2.0), 0.0});
    comps.push_back({Latent::full(shape, 2.0), 0.0});
    const auto mixture = conditional_mixture_oracle(std::move(comps), sched);

    TrivialRefiner refiner;
    const EditResult result =
        infedit_run(Latent::full(shape, -2.0), Condition{{0}}, Condition{{1}}, *mixture,
                    TimestepSequence({850, 500, 200, 60}), sched, refiner, StreamFactory(9));
    CHECK(max_abs_diff(result.z0_tgt, Latent::full(shape, 2.0)) <= 1e-9);
    CHECK(result.stats.front().max_abs_eps_diff > 0.0);
    // The per-step gap to the source initial reflects the 4-unit move.
    CHECK(result.stats.back().max_abs_z0_diff == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("blend masks flow from the refiner into each advance") {
    const VarianceSchedule& sched = tiny_schedule();
    const ToyAttentionDenoiser toy(6, 2, 2, 3, 8, sched);
    const Shape shape{2, 2};
    StreamFactory init(321);
    RngStream stream = init.stream("init");
    const Latent z0 = stream.normal_latent(shape);

    // With equal masks the blend copies the advanced source over the target,
    // so the run ends exactly on the source initial despite the edit.
    SourceCopyBlendRefiner refiner(shape_numel(shape));
    const EditResult result = infedit_run(z0, Condition{{1}}, Condition{{2}}, toy,
                                          TimestepSequence({4, 3, 2}), sched, refiner,
                                          StreamFactory(55));
    CHECK(bitwise_equal(result.z0_tgt, z0));
}

TEST_CASE("edit run validation and error context") {
    const VarianceSchedule& sched = tiny_schedule();
    const Shape shape{2, 2};
    const auto oracle = gaussian_oracle(Latent::zeros(shape), 1.0, sched);
    const Condition c_src{{0}};
    const Condition c_tgt{{1}};
    TrivialRefiner trivial;

    SUBCASE("timesteps beyond the schedule are rejected") {
        CHECK_THROWS_WITH_AS(infedit_run(Latent::zeros(shape), c_src, c_tgt, *oracle,
                                         TimestepSequence({5, 2}), sched, trivial,
                                         StreamFactory(1)),
                             "infedit_run: timestep 5 exceeds schedule length 4",
                             std::invalid_argument);
    }
    SUBCASE("non-finite source initials are rejected") {
        Latent bad = Latent::zeros(shape);
        bad[1] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(infedit_run(bad, c_src, c_tgt, *oracle, TimestepSequence({3}), sched,
                                    trivial, StreamFactory(1)),
                        std::invalid_argument);
    }
    SUBCASE("a refiner needing attention control rejects plain denoisers up front") {
        BrokenLayoutRefiner layout;
        CHECK_THROWS_WITH_AS(
            infedit_run(Latent::zeros(shape), c_src, c_tgt, *oracle, TimestepSequence({3, 2}),
                        sched, layout, StreamFactory(1)),
            "denoiser 'gaussian_oracle' lacks the attention capture/injection the refiner "
            "requires",
            CapabilityError);
    }
    SUBCASE("source-branch failures carry the step and branch") {
        const ThrowingDenoiser thrower(*oracle, 2, c_src);
        CHECK_THROWS_WITH_AS(infedit_run(Latent::zeros(shape), c_src, c_tgt, thrower,
                                         TimestepSequence({3, 2}), sched, trivial,
                                         StreamFactory(1)),
                             "edit step 2 (timestep 2), source branch: boom", std::runtime_error);
    }
    SUBCASE("target-branch failures carry the step and branch") {
        const ThrowingDenoiser thrower(*oracle, 2, c_tgt);
        CHECK_THROWS_WITH_AS(infedit_run(Latent::zeros(shape), c_src, c_tgt, thrower,
                                         TimestepSequence({3, 2}), sched, trivial,
                                         StreamFactory(1)),
                             "edit step 2 (timestep 2), target branch: boom", std::runtime_error);
    }
    SUBCASE("a refiner that drops its declared layout branch is a logic error") {
        const ToyAttentionDenoiser toy(8, 2, 2, 3, 8, sched);
        BrokenLayoutRefiner layout;
        CHECK_THROWS_WITH_AS(infedit_run(Latent::zeros(shape), c_src, c_tgt, toy,
                                         TimestepSequence({3, 2}), sched, layout,
                                         StreamFactory(1)),
                             "infedit_run: refiner layout-branch contract violated at step 2",
                             std::logic_error);
    }
}
