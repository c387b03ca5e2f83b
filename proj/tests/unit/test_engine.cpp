#include <gtest/gtest.h>

#include <map>

#include "fixtures.hpp"
#include "hsynth/audit.hpp"
#include "hsynth/engine.hpp"

using namespace hsynth;
using hsynth::fixtures::small_cohort;

TEST(Cohort, QuotaSamplingHitsStratumTargets) {
    GeneratorConfig cfg;
    cfg.users = 100;
    const Generator gen(cfg, builtin_catalogs());
    std::map<AgeStratum, int> strata;
    for (const auto& u : gen.cohort()) {
        for (const auto& c : builtin_mixture()) {
            if (c.name == u.cell) ++strata[c.stratum];
        }
        EXPECT_GE(u.horizon, cfg.horizon_min);
        EXPECT_LE(u.horizon, cfg.horizon_max);
    }
    EXPECT_EQ(strata[AgeStratum::young], 33);
    EXPECT_EQ(strata[AgeStratum::middle], 44);
    EXPECT_EQ(strata[AgeStratum::senior], 23);
}

TEST(Cohort, MeanSpanNearConfiguredMidpoint) {
    double mean = 0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GeneratorConfig cfg;
        cfg.users = 10;
        cfg.root_seed = seed;
        for (const auto& u : Generator(cfg, builtin_catalogs()).cohort()) {
            mean += u.horizon;
            ++n;
        }
    }
    mean /= n;
    const double mid = (388 + 1813) / 2.0;
    EXPECT_NEAR(mean, mid, 0.15 * mid);
}

TEST(Cohort, ProfilesMatchTheirCell) {
    GeneratorConfig cfg;
    cfg.users = 30;
    const Generator gen(cfg, builtin_catalogs());
    for (const auto& u : gen.cohort()) {
        const Profile p = gen.sample_profile(u);
        EXPECT_EQ(p.mixture_cell, u.cell);
        EXPECT_EQ(stratum_of_age(p.age), p.age_stratum);
        EXPECT_TRUE(std::is_sorted(p.conditions.begin(), p.conditions.end()));
        EXPECT_EQ(p.user_id, user_id_for(u.user_index));
    }
    EXPECT_EQ(user_id_for(7), "user-0007");
}

TEST(Engine, BundlesValidate) {
    for (const auto& b : small_cohort()) {
        const auto v = validate_bundle(b);
        EXPECT_TRUE(v.empty()) << (v.empty() ? "" : v.front().type + " " + v.front().field + " " + v.front().locus);
        EXPECT_EQ(b.audit, audit_bundle(b));
    }
}

TEST(Engine, WeeklyCapHoldsInRealizedTrajectories) {
    for (const auto& b : small_cohort()) {
        for (Day t = 0; t < b.horizon(); ++t) {
            int starts = 0;
            for (const auto& e : b.events) starts += e.start_day > t - 7 && e.start_day <= t;
            EXPECT_LE(starts, 3);
        }
        for (const auto& e : b.events) EXPECT_GE(e.start_day, 7);
    }
}

TEST(Engine, ValidationDetectsStatusMutation) {
    UserBundle b = small_cohort().front();
    ASSERT_FALSE(b.exams.empty());
    auto& r = b.exams.front().results.front();
    r.value = r.reference_range.high + 1.0;
    r.status = ExamStatus::normal;
    const auto v = validate_bundle(b);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v.front().type, "status_consistency");
}

TEST(Engine, SerialAndParallelAgree) {
    GeneratorConfig cfg;
    cfg.users = 3;
    cfg.root_seed = 11;
    cfg.horizon_min = 400;
    cfg.horizon_max = 700;
    EXPECT_EQ(Generator(cfg, builtin_catalogs()).generate_cohort(3), small_cohort());
}

TEST(Engine, SameSeedSameBundle) {
    GeneratorConfig cfg;
    cfg.users = 3;
    cfg.root_seed = 11;
    cfg.horizon_min = 400;
    cfg.horizon_max = 700;
    const Generator gen(cfg, builtin_catalogs());
    EXPECT_EQ(gen.generate_user(gen.cohort()[1]), small_cohort()[1]);
    cfg.root_seed = 12;
    EXPECT_NE(Generator(cfg, builtin_catalogs()).generate_cohort(1).front(), small_cohort().front());
}

TEST(Engine, ReplayReproducesDevice) {
    const auto& b = small_cohort().front();
    EXPECT_EQ(simulate_device(b, b.events), b.device);
}

TEST(Engine, CounterfactualOnlyTouchesImpactedIndicators) {
    const auto& b = small_cohort().front();
    ASSERT_FALSE(b.events.empty());
    const Event& e = b.events.front();
    const auto cf = resimulate_without(b, e.event_id);
    int changed = 0;
    for (const auto& [key, series] : b.device) {
        if (e.impact_on(key)) changed += cf.at(key) != series;
        else EXPECT_EQ(cf.at(key), series) << key;
    }
    EXPECT_GT(changed, 0);
    EXPECT_THROW(resimulate_without(b, "evt-9999"), std::invalid_argument);
}

TEST(Engine, AbsenceRateControlsCoverage) {
    GeneratorConfig cfg;
    cfg.users = 2;
    cfg.absence_rate = 0.2;
    cfg.horizon_min = cfg.horizon_max = 500;
    for (const auto& b : Generator(cfg, builtin_catalogs()).generate_cohort(1)) {
        EXPECT_NEAR(b.audit.indicator_numeric_coverage, 0.8, 0.02);
        for (const auto& [k, s] : b.device) {
            for (const auto& d : s.days) {
                EXPECT_EQ(d.value.has_value(), !d.absent_reason.has_value());
                EXPECT_TRUE(d.log.has_value());
            }
        }
    }
}

TEST(Engine, ExamsAgreeWithDeviceWindows) {
    for (const auto& b : small_cohort()) {
        EXPECT_DOUBLE_EQ(b.audit.exam_device_consistency, 1.0);
        EXPECT_GT(b.audit.exam_overlap_checked, 0);
    }
}

TEST(Engine, PluggablePolicyIsUsed) {
    GeneratorConfig cfg;
    cfg.users = 1;
    cfg.horizon_min = cfg.horizon_max = 200;
    Generator gen(cfg, builtin_catalogs());
    gen.set_policy([](const Catalogs& c) {
        return std::make_shared<JsonEventPolicy>(
            c.events, [](const std::string&) { return std::optional<std::string>(R"({"entry_id":"travel","duration":3})"); });
    });
    const auto b = gen.generate_user(gen.cohort().front());
    ASSERT_FALSE(b.events.empty());
    for (const auto& e : b.events) EXPECT_EQ(e.catalog_id, "travel");
    EXPECT_TRUE(validate_bundle(b).empty());
}
