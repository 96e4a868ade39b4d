#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

#include "kdmdp/rover.hpp"

using namespace kdmdp;
using namespace kdmdp::testing;
using nlohmann::json;

namespace {

HybridMdp minimal_model() {
    return single_state_model(1, {{RewardModel::unit(1, PwlcSet::zero(1)), TransitionModel::unit(1, stay_put(1))}});
}

bool any_message_contains(const std::vector<Violation>& v, const std::string& needle) {
    for (const auto& x : v)
        if (x.message.find(needle) != std::string::npos || x.path.find(needle) != std::string::npos) return true;
    return false;
}

/// Semantic model equality via save_model's canonical text.
void check_same(const HybridMdp& a, const HybridMdp& b) { CHECK(save_model(a) == save_model(b)); }

} // namespace

TEST_CASE("minimal model validates and round-trips") {
    const auto m = minimal_model();
    CHECK(validate(m).empty());
    const auto text = save_model(m);
    const auto back = load_model(text);
    check_same(m, back);
    CHECK(back.discrete_states == m.discrete_states);
    CHECK(back.actions == m.actions);
}

TEST_CASE("probabilities not summing to one") {
    OutcomeSet os{{{OutcomeKind::relative, {0.0}, 0.2}, {OutcomeKind::relative, {0.1}, 0.7}}};
    const auto m = single_state_model(1, {{RewardModel::unit(1, PwlcSet::zero(1)), TransitionModel::unit(1, os)}});
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message == "probabilities sum to 0.9");
}

TEST_CASE("absolute target outside the cube") {
    OutcomeSet os{{{OutcomeKind::absolute, {1.5, 0.2}, 1.0}}};
    const auto m = single_state_model(2, {{RewardModel::unit(2, PwlcSet::zero(2)), TransitionModel::unit(2, os)}});
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message.find("absolute target") != std::string::npos);
    CHECK(v[0].path.find("outcomes[0]") != std::string::npos);
}

TEST_CASE("mixed kinds in one set are rejected") {
    OutcomeSet os{{{OutcomeKind::absolute, {0.5}, 0.5}, {OutcomeKind::relative, {0.1}, 0.5}}};
    const auto m = single_state_model(1, {{RewardModel::unit(1, PwlcSet::zero(1)), TransitionModel::unit(1, os)}});
    CHECK(any_message_contains(validate(m), "mixes relative and absolute"));
}

TEST_CASE("missing continuous conditional names the triple") {
    auto m = minimal_model();
    m.discrete_states.push_back("t");
    m.entries[0].discrete = DiscreteTransition::unit(1, SuccessorDist{{{0, 0.5}, {1, 0.5}}});
    ModelEntry idle{1, 0, RewardModel::unit(1, PwlcSet::zero(1)), DiscreteTransition::unit(1, SuccessorDist{{{1, 1.0}}}), {}};
    idle.continuous.emplace(1, TransitionModel::unit(1, stay_put(1)));
    m.entries.push_back(std::move(idle));
    CHECK(any_message_contains(validate(m), "(s, a0, t)"));

    // Same failure through the document loader.
    m.entries[0].continuous.emplace(1, TransitionModel::unit(1, stay_put(1)));
    REQUIRE(validate(m).empty());
    json doc = json::parse(save_model(m));
    doc["entries"][0]["continuous"].erase("t");
    try {
        load_model(doc.dump());
        FAIL("expected a validation error");
    } catch (const ModelValidationError& e) {
        CHECK(any_message_contains(e.violations(), "(s, a0, t)"));
    }
}

TEST_CASE("state without any action is reported") {
    auto m = minimal_model();
    m.discrete_states.push_back("orphan");
    CHECK(any_message_contains(validate(m), "orphan"));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(load_model("{not json"), ParseError);
    CHECK_THROWS_AS(load_model("[]"), ParseError);
    json doc = json::parse(save_model(minimal_model()));
    doc["dims"] = "two";
    CHECK_THROWS_AS(load_model(doc.dump()), ParseError);
    CHECK_THROWS_AS(load_model_file("/nonexistent/model.json"), ParseError);
}

TEST_CASE("empty model is rejected") {
    json doc = json::parse(save_model(minimal_model()));
    doc["entries"] = json::array();
    CHECK_THROWS_AS(load_model(doc.dump()), ModelError);
}

TEST_CASE("random hybrid models round-trip") {
    Rng g(21);
    for (int t = 0; t < 20; ++t) {
        const auto m = random_hybrid(g, uniform_int(g, 1, 3), uniform_int(g, 1, 4), 3);
        REQUIRE(validate(m).empty());
        const auto back = load_model(save_model(m));
        check_same(m, back);
        for (int i = 0; i < 50; ++i) {
            const auto x = random_point_in(g, Rect::unit(m.dims), 0.0);
            for (std::size_t e = 0; e < m.entries.size(); ++e)
                CHECK(eval(m.entries[e].reward.locate(x).payload, x).value == eval(back.entries[e].reward.locate(x).payload, x).value);
        }
    }
}

TEST_CASE("shipped rover instances round-trip") {
    for (int d = 1; d <= 3; ++d) {
        auto spec = load_domain_spec_file(std::string(KDMDP_TEST_DATA_DIR) + "/rover_" + std::to_string(d) + "d.json");
        spec.resolution = 3;
        const auto m = generate(spec);
        CHECK(validate(m).empty());
        const auto back = load_model(save_model(m));
        CHECK(validate(back).empty());
        check_same(m, back);
    }
}
