#include <array>
#include <cstring>

#include "doctest.h"
#include "support.hpp"

#include "kdmdp/mc.hpp"

using namespace kdmdp;
using namespace kdmdp::testing;

namespace {

SolveOptions serial() {
    SolveOptions o;
    o.threads = 1;
    return o;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

/// Two actions, a shift and a jump, both without randomness.
HybridMdp deterministic_model() {
    Rng g(1);
    auto stepped = random_partition<PwlcSet>(g, Rect::unit(2), 0, 5, [](const Rect& r) { return PwlcSet::constant(2, r.low(0) + 2 * r.low(1)); });
    return single_state_model(
        2,
        {{std::move(stepped), TransitionModel::unit(2, OutcomeSet{{{OutcomeKind::relative, {-0.1, 0.05}, 1.0}}})},
         {RewardModel::unit(2, PwlcSet(2, {{{1.0, -0.5}, 0.25}})), TransitionModel::unit(2, OutcomeSet{{{OutcomeKind::absolute, {0.8, 0.1}, 1.0}}})}},
        4, -3.0);
}

} // namespace

TEST_CASE("zero-reward model") {
    auto m = single_state_model(1, {{RewardModel::unit(1, PwlcSet::zero(1)), TransitionModel::unit(1, OutcomeSet{{{OutcomeKind::relative, {-0.1}, 0.5}, {OutcomeKind::relative, {0.0}, 0.5}}})}}, 3);
    const auto r = value_iteration(m, serial());
    RolloutConfig cfg;
    cfg.start_point = {0.5};
    cfg.episodes = 1000;
    const auto res = simulate(m, r.policies, cfg);
    CHECK(res.mean == 0.0);
    CHECK(res.std_error == 0.0);
    CHECK(res.episodes == 1000);
}

TEST_CASE("deterministic model matches the value exactly") {
    const auto m = deterministic_model();
    const auto r = value_iteration(m, serial());
    for (const auto& x : {std::array{0.55, 0.35}, std::array{0.15, 0.95}, std::array{0.05, 0.5}}) {
        RolloutConfig cfg;
        cfg.start_point = {x[0], x[1]};
        cfg.episodes = 50;
        const auto res = simulate(m, r.policies, cfg);
        CHECK(res.std_error == 0.0);
        CHECK(res.mean == doctest::Approx(eval_value(r.values, 0, x, 4)).epsilon(1e-12));
    }
}

TEST_CASE("seeds and threads") {
    Rng g(41);
    const auto m = random_hybrid(g, 2, 3, 4);
    const auto r = value_iteration(m, serial());
    RolloutConfig cfg;
    cfg.start_point = {0.6, 0.4};
    cfg.episodes = 5000;
    cfg.seed = 99;
    const auto a = simulate(m, r.policies, cfg);
    const auto b = simulate(m, r.policies, cfg);
    CHECK(same_bits(a.mean, b.mean));
    CHECK(same_bits(a.std_error, b.std_error));
    cfg.threads = 4;
    const auto c = simulate(m, r.policies, cfg);
    CHECK(same_bits(a.mean, c.mean));
    CHECK(same_bits(a.std_error, c.std_error));
    CHECK(same_bits(rollout_episode(m, r.policies, cfg, 17), rollout_episode(m, r.policies, cfg, 17)));
    cfg.seed = 100;
    CHECK_FALSE(same_bits(a.mean, simulate(m, r.policies, cfg).mean));
}

TEST_CASE("random models agree with the value within three standard errors") {
    Rng g(42);
    int checked = 0;
    for (int trial = 0; trial < 8; ++trial) {
        const auto m = random_hybrid(g, uniform_int(g, 1, 2), uniform_int(g, 1, 3), 3);
        const auto r = value_iteration(m, serial());
        RolloutConfig cfg;
        cfg.start_point = random_point_in(g, Rect::unit(m.dims), 0.0);
        cfg.episodes = 20000;
        cfg.seed = static_cast<std::uint64_t>(trial);
        const auto res = simulate(m, r.policies, cfg);
        const double v = eval_value(r.values, 0, cfg.start_point, 3);
        if (res.std_error == 0.0) {
            CHECK(res.mean == doctest::Approx(v).epsilon(1e-9));
        } else {
            CHECK(std::abs(res.mean - v) <= 3.0 * res.std_error);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("json record") {
    RolloutResult r{1.5, 0.25, 10, 7};
    const auto j = r.to_json();
    CHECK(j.find("\"stderr\"") != std::string::npos);
    CHECK(j.find("\"seed\"") != std::string::npos);
}

TEST_CASE("policy gap") {
    const auto m = deterministic_model();
    auto r = value_iteration(m, serial());
    auto broken = m;
    broken.entries.pop_back();  // the policy may now pick a missing action
    for (auto& p : r.policies)
        p.states[0] = map_leaves(p.states[0], [](const auto& lf) { return PolicyLeaf{lf.payload.fns.subset({0}), {1}}; });
    RolloutConfig cfg;
    cfg.start_point = {0.5, 0.5};
    cfg.episodes = 1;
    CHECK_THROWS_AS(simulate(broken, r.policies, cfg), DomainError);
}
