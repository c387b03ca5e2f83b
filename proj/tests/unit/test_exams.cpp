#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hsynth/exams.hpp"

using namespace hsynth;
using hsynth::fixtures::make_spec;

TEST(ExamSchedule, VisitCountAndOrder) {
    // nominal visits at 30 + k * 182.5 that fall before day 729: k = 0..3
    for (int seed = 0; seed < 50; ++seed) {
        Stream s = make_stream(static_cast<std::uint64_t>(seed), "exam_schedule");
        const auto v = schedule_exams(730, 2.0, s);
        ASSERT_EQ(v.size(), 4u);
        for (std::size_t i = 0; i < v.size(); ++i) {
            EXPECT_GE(v[i], 30);
            EXPECT_LT(v[i], 730);
            if (i) EXPECT_GT(v[i], v[i - 1]);
        }
    }
    Stream s(1);
    EXPECT_THROW(schedule_exams(730, 0.0, s), std::invalid_argument);
}

TEST(WindowStat, TrailingMean) {
    auto spec = make_spec("x", 0, -100, 100);
    DeviceSeries series;
    for (int t = 0; t < 20; ++t) series.days.push_back({static_cast<double>(t), std::nullopt, std::nullopt});
    EXPECT_DOUBLE_EQ(*window_stat(series, spec, 10), 7.0); // mean of 4..10
    spec.speed_class = SpeedClass::slow;
    EXPECT_DOUBLE_EQ(*window_stat(series, spec, 10), 5.0); // clipped to 0..10
    for (int t = 5; t <= 10; ++t) series.days[static_cast<std::size_t>(t)].value.reset();
    spec.speed_class = SpeedClass::fast;
    EXPECT_FALSE(window_stat(series, spec, 10).has_value()); // only day 4 left
}

TEST(ExamStatus, InclusiveNormalBounds) {
    const ReferenceRange r{4.0, 5.6};
    EXPECT_EQ(derive_status(4.0, r), ExamStatus::normal);
    EXPECT_EQ(derive_status(5.6, r), ExamStatus::normal);
    EXPECT_EQ(derive_status(5.61, r), ExamStatus::abnormal);
    EXPECT_EQ(derive_status(3.99, r), ExamStatus::abnormal);
}

TEST(Anchor, PerturbationIsBoundedAndClamped) {
    auto spec = make_spec("x", 5, 3, 15);
    spec.reference_range = ReferenceRange{4.0, 6.0};
    EXPECT_DOUBLE_EQ(exam_noise_sd(spec), 0.04);
    EXPECT_DOUBLE_EQ(anchor_with(14.99, spec, 0.1), 15.0);
    for (int i = 0; i < 1000; ++i) {
        Stream s = make_stream(2, "exam", i, "x");
        EXPECT_LE(std::abs(anchor(5.0, spec, s) - 5.0), 3 * 0.04 + 1e-12);
    }
}

TEST(Anchor, LatentTruthAddsDeltaInTransformDomain) {
    auto spec = make_spec("x", 50, 0, 100);
    spec.transform = Transform::log;
    EXPECT_NEAR(latent_truth(spec, std::log(2.0), {1, 0.0}), 100.0, 1e-9);
}

TEST(ExamSummary, ListsAbnormalKeys) {
    std::vector<ExamResult> r{{"a", 1, "1", {0, 2}, ExamStatus::normal}, {"b", 9, "1", {0, 2}, ExamStatus::abnormal}};
    EXPECT_EQ(exam_summary(r), "abnormal: b");
    r.pop_back();
    EXPECT_EQ(exam_summary(r), "no abnormal findings");
}
