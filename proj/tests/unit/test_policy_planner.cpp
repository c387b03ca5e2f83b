#include <gtest/gtest.h>

#include <map>

#include "fixtures.hpp"
#include "hsynth/catalog.hpp"
#include "hsynth/planner.hpp"
#include "hsynth/policy.hpp"

using namespace hsynth;

TEST(Gate, WarmupActiveCapAndWeeklyCap) {
    const SparsityConfig cfg{3, 12, 7};
    const std::vector<Day> none;
    EXPECT_FALSE(gate(none, 0, 6, cfg));
    EXPECT_TRUE(gate(none, 0, 7, cfg));
    EXPECT_FALSE(gate(none, 12, 20, cfg));
    const std::vector<Day> three{14, 15, 17};
    EXPECT_FALSE(gate(three, 0, 20, cfg)); // window (13, 20] holds 3 starts
    EXPECT_TRUE(gate(three, 0, 21, cfg));  // day 14 dropped from (14, 21]
}

TEST(ScriptedPolicy, SelectionFollowsRates) {
    EventCatalog cat;
    CatalogEntry a;
    a.id = "a";
    a.base_rate = 0.02;
    a.impacts = {{"steps", {1, 2}, {1, 2}, {1, 2}}};
    CatalogEntry b = a;
    b.id = "b";
    b.base_rate = 0.01;
    cat.entries = {a, b};
    const ScriptedPolicy policy(cat);
    PolicyContext ctx;
    ctx.phase.theme_tag = "none";
    EXPECT_NEAR(policy.event_probability(ctx), 0.03, 1e-15);
    std::map<std::string, int> counts;
    for (int d = 0; d < 200000; ++d) {
        Stream s = make_stream(3, "policy", d);
        if (auto draft = policy.decide(ctx, s)) ++counts[draft->entry_id];
    }
    const double ratio = static_cast<double>(counts["a"]) / counts["b"];
    EXPECT_NEAR(ratio, 2.0, 0.2);
    EXPECT_NEAR((counts["a"] + counts["b"]) / 200000.0, 0.03, 0.002);
}

TEST(ScriptedPolicy, StorylineContradictionAndEligibility) {
    const EventCatalog cat = builtin_events();
    const ScriptedPolicy policy(cat);
    PolicyContext ctx;
    ctx.phase.theme_tag = "exercise_build";
    const auto* jog = cat.find("jogging");
    ASSERT_NE(jog, nullptr);
    EXPECT_DOUBLE_EQ(policy.weighted_rate(*jog, ctx), jog->base_rate * 4.0);
    ctx.phase_past_midpoint = true;
    EXPECT_DOUBLE_EQ(policy.weighted_rate(*jog, ctx), jog->base_rate * 8.0);
    ctx.contradicted_tags = jog->affinity;
    EXPECT_DOUBLE_EQ(policy.weighted_rate(*jog, ctx), 0.0);
    const auto* adj = cat.find("medication_adjustment");
    ASSERT_NE(adj, nullptr);
    EXPECT_DOUBLE_EQ(policy.weighted_rate(*adj, PolicyContext{}), 0.0);
    EXPECT_LE(ScriptedPolicy(cat).event_probability(ctx), 0.35);
}

TEST(Instantiate, JoggingBetaWithinTemplate) {
    const EventCatalog cat = builtin_events();
    const auto* jog = cat.find("jogging");
    ASSERT_NE(jog, nullptr);
    std::vector<std::string> keys;
    for (const auto& t : builtin_indicators()) keys.push_back(t.spec.key);
    for (int i = 0; i < 1000; ++i) {
        Stream s = make_stream(1, "inst", i);
        const Event e = instantiate({"jogging", jog->category, 30}, cat, keys, 10, 0, "evt-0001", s);
        const auto* hr = e.impact_on("resting_hr");
        ASSERT_NE(hr, nullptr);
        EXPECT_GE(hr->beta, -6.0);
        EXPECT_LE(hr->beta, -3.0);
        for (std::size_t k = 0; k < e.impacts.size(); ++k) {
            EXPECT_GE(e.impacts[k].beta, jog->impacts[k].beta.lo);
            EXPECT_LE(e.impacts[k].beta, jog->impacts[k].beta.hi);
        }
    }
    Stream s(1);
    EXPECT_THROW(instantiate({"nope", EventCategory::diet_change, 3}, cat, keys, 0, 0, "x", s), std::invalid_argument);
}

TEST(Expire, KeepsThroughFadeWindow) {
    auto e = fixtures::make_event("e", 10, 5, {{"steps", 1.0, 1.0, 4.0}});
    const std::vector<const Event*> active{&e};
    EXPECT_EQ(expire(active, 19).size(), 1u); // support ends at 19
    EXPECT_EQ(expire(active, 20).size(), 0u);
}

TEST(PolicyReply, StrictParsing) {
    const EventCatalog cat = builtin_events();
    EXPECT_FALSE(parse_event_draft("null", cat).has_value());
    EXPECT_EQ(parse_event_draft(R"({"entry_id":"jogging","duration":20})", cat)->duration, 20);
    EXPECT_THROW(parse_event_draft(R"({"entry_id":"jogging","duration":20,"x":1})", cat), std::invalid_argument);
    EXPECT_THROW(parse_event_draft(R"({"entry_id":"unknown","duration":20})", cat), std::invalid_argument);
    EXPECT_THROW(parse_event_draft("{", cat), std::invalid_argument);
}

TEST(JsonPolicy, TransportFailureMeansNoEvent) {
    const EventCatalog cat = builtin_events();
    const JsonEventPolicy down(cat, [](const std::string&) { return std::nullopt; });
    const JsonEventPolicy bad(cat, [](const std::string&) { return std::optional<std::string>("[1]"); });
    const JsonEventPolicy good(cat, [](const std::string&) {
        return std::optional<std::string>(R"({"entry_id":"travel","duration":4})");
    });
    Stream s(1);
    EXPECT_FALSE(down.decide(PolicyContext{}, s));
    EXPECT_FALSE(bad.decide(PolicyContext{}, s));
    EXPECT_EQ(good.decide(PolicyContext{}, s)->entry_id, "travel");
}

TEST(Planner, PhaseCountTargets) {
    EXPECT_EQ(target_phase_count(1060), 10);
    EXPECT_EQ(target_phase_count(388), 4);
    EXPECT_EQ(target_phase_count(200), 4);
    EXPECT_EQ(target_phase_count(5000), 20);
}

TEST(Planner, TemplatePlansTileTheHorizon) {
    const TemplatePlanner planner(builtin_themes());
    Profile p;
    p.conditions = {"hypertension"};
    for (int h : {180, 388, 1060, 1813}) {
        for (int seed = 0; seed < 20; ++seed) {
            Stream s = make_stream(static_cast<std::uint64_t>(seed), "plan");
            const auto plan = planner.plan(p, h, "2022-01-03", s);
            EXPECT_NO_THROW(check_plan(plan));
            EXPECT_LE(std::abs(static_cast<int>(plan.phases.size()) - target_phase_count(h)), 2);
            EXPECT_EQ(phase_at(plan, h - 1).index, static_cast<int>(plan.phases.size()) - 1);
        }
    }
    Stream s(1);
    EXPECT_THROW(planner.plan(p, 179, "2022-01-03", s), std::invalid_argument);
}

TEST(Planner, JsonPlannerFallsBack) {
    const TemplatePlanner fallback(builtin_themes());
    const JsonPlanner down([](const std::string&) { return std::nullopt; }, fallback);
    Stream a(4), b(4);
    EXPECT_EQ(down.plan(Profile{}, 400, "2022-01-03", a), fallback.plan(Profile{}, 400, "2022-01-03", b));
    const JsonPlanner remote(
        [](const std::string&) {
            return std::optional<std::string>(
                R"({"overall_theme":"t","phases":[{"name":"a","start_day":0,"end_day":200,"theme_tag":"maintenance"},)"
                R"({"name":"b","start_day":200,"end_day":400,"theme_tag":"exercise_build"}]})");
        },
        fallback);
    Stream c(4);
    const auto plan = remote.plan(Profile{}, 400, "2022-01-03", c);
    ASSERT_EQ(plan.phases.size(), 2u);
    EXPECT_EQ(plan.phases[1].theme_tag, "exercise_build");
}
