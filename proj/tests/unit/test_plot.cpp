#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "plot.hpp"

using namespace hsynth;
using hsynth::fixtures::linear_bundle;

TEST(Plot, RollingMeanIsTrailingWithinRange) {
    const UserBundle b = linear_bundle();
    const auto m = rolling_mean(b.device.at("steps"), 10, 30);
    ASSERT_EQ(m.size(), 21u);
    EXPECT_DOUBLE_EQ(*m[0], 10.0);
    EXPECT_DOUBLE_EQ(*m[6], 13.0);
    EXPECT_DOUBLE_EQ(*m[7], 14.0);
    EXPECT_DOUBLE_EQ(*m[20], 27.0);
}

TEST(Plot, RollingMeanSkipsAbsentDays) {
    UserBundle b = linear_bundle();
    auto& days = b.device["steps"].days;
    for (int t = 20; t < 30; ++t) days[t].value.reset();
    const auto m = rolling_mean(b.device.at("steps"), 20, 40);
    EXPECT_FALSE(m[0].has_value());
    EXPECT_FALSE(m[9].has_value());
    EXPECT_DOUBLE_EQ(*m[10], 30.0);
    EXPECT_DOUBLE_EQ(*m[16], 33.0);
}

TEST(Plot, ShadingIsClippedToRange) {
    const UserBundle b = linear_bundle();
    const auto spans = shaded_spans(b, "steps", 55, 104);
    ASSERT_EQ(spans.size(), 2u);
    EXPECT_EQ(spans[0].event_id, "evt-A");
    EXPECT_EQ(spans[0].from, 55);
    EXPECT_EQ(spans[0].to, 59);
    EXPECT_EQ(spans[1].event_id, "evt-C");
    EXPECT_EQ(spans[1].from, 100);
    EXPECT_EQ(spans[1].to, 104);
    EXPECT_TRUE(shaded_spans(b, "steps", 0, 40).empty());
    EXPECT_EQ(shaded_spans(b, "hr", 0, 119).size(), 2u);
}

TEST(Plot, SvgAndErrors) {
    const UserBundle b = linear_bundle();
    const auto svg = render_trajectory_svg(b, {"steps", 0, 119});
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_THROW(render_trajectory_svg(b, {"nope", 0, 10}), std::invalid_argument);
    EXPECT_THROW(render_trajectory_svg(b, {"steps", 50, 10}), std::invalid_argument);
    EXPECT_THROW(render_trajectory_svg(b, {"steps", 0, 500}), std::invalid_argument);
    EXPECT_THROW(render_trajectory_svg(b, {"hba1c", 0, 10}), std::invalid_argument);
}
