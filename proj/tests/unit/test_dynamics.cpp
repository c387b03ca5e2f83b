#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "hsynth/dynamics.hpp"

using namespace hsynth;
using hsynth::fixtures::make_spec;

TEST(Kernel, ZeroAtAndBeforeStart) {
    EXPECT_EQ(eval_kernel(10, 20, 4, 6, 10), 0.0);
    EXPECT_EQ(eval_kernel(10, 20, 4, 6, 3), 0.0);
    EXPECT_EQ(eval_kernel(10, 20, 4, 6, 26.0001), 0.0);
}

TEST(Kernel, HalfAtRiseMidpoint) { EXPECT_NEAR(eval_kernel(10, 20, 4, 6, 12), 0.5, 1e-15); }

TEST(Kernel, ClosedFormOnRiseAndFade) {
    const double rise = 1.0 / (1.0 + std::exp(-(6.0 / 4.0) * (15.0 - 10.0 - 2.0)));
    EXPECT_NEAR(eval_kernel(10, 20, 4, 6, 15), rise, 1e-15);
    const double at_end = 1.0 / (1.0 + std::exp(-(6.0 / 4.0) * (20.0 - 10.0 - 2.0)));
    EXPECT_NEAR(eval_kernel(10, 20, 4, 6, 23), at_end * std::exp(-0.5 * 3.0), 1e-15);
    EXPECT_NEAR(eval_kernel(10, 20, 4, 6, 26), at_end * std::exp(-3.0), 1e-15);
}

TEST(Kernel, LiteralModeFadesFromOne) {
    EXPECT_NEAR(eval_kernel(10, 20, 4, 6, 26, KernelMode::literal), std::exp(-3.0), 1e-15);
    EXPECT_NEAR(eval_kernel(10, 20, 4, 6, 20.000001, KernelMode::literal), 1.0, 1e-5);
}

TEST(Kernel, RejectsDegenerateSpans) {
    EXPECT_THROW(eval_kernel(10, 10, 4, 6, 12), std::invalid_argument);
    EXPECT_THROW(eval_kernel(10, 20, 0, 6, 12), std::invalid_argument);
    EXPECT_THROW(eval_kernel(10, 20, 4, -1, 12), std::invalid_argument);
}

TEST(SoftCap, ClosedFormExample) {
    const std::vector<Contribution> one{{1.0, 0.1}};
    EXPECT_NEAR(superpose(one, 10.0).delta, 10.0 * std::tanh(0.01), 1e-15);
    EXPECT_NEAR(soft_cap(1.0, 10.0), 0.9966799462495582, 1e-15);
    EXPECT_THROW(superpose(one, 0.0), std::invalid_argument);
}

TEST(SoftCap, SumsBeforeCapping) {
    const std::vector<Contribution> cs{{3.0, 1.0}, {-1.0, 0.5}, {2.0, 0.25}};
    const auto s = superpose(cs, 2.0);
    EXPECT_DOUBLE_EQ(s.raw, 3.0);
    EXPECT_NEAR(s.delta, 2.0 * std::tanh(1.5), 1e-15);
}

TEST(Transform, RoundTripsAndDomains) {
    auto s = make_spec("x", 50, 10, 90);
    for (Transform t : {Transform::identity, Transform::log, Transform::logit}) {
        s.transform = t;
        for (double v : {11.0, 50.0, 89.5}) EXPECT_NEAR(from_transform(to_transform(v, s), s), v, 1e-9);
    }
    s.transform = Transform::logit;
    EXPECT_NEAR(to_transform(50, s), 0.0, 1e-15);
    EXPECT_THROW(to_transform(10, s), std::domain_error);
    s.transform = Transform::log;
    EXPECT_THROW(to_transform(-1, s), std::domain_error);
    EXPECT_TRUE(std::isfinite(to_transform_state(0.0, s)));
}

TEST(Seasonal, WeekdayTableAndAnnualSine) {
    auto s = make_spec("x", 50, 0, 100);
    s.weekday_offsets = {1, 2, 3, 4, 5, 6, 7};
    s.annual_amplitude = 2.0;
    s.annual_phase = 0.25;
    const CalendarDay d{3, 0.0};
    EXPECT_NEAR(seasonal_offset(s, d), 4.0 + 2.0 * std::sin(2 * std::numbers::pi * 0.25), 1e-12);
    EXPECT_NEAR(baseline_level(s, d), 56.0, 1e-12);
}

TEST(Proposal, GeometricDecayWithoutShocks) {
    auto s = make_spec("x", 50, 0, 100);
    s.inertia = 0.8;
    const CalendarDay d{1, 0.1};
    double y = 60.0;
    for (int t = 1; t <= 20; ++t) {
        y = propose_value(s, y, d, d, 0.0, 0.0).value;
        EXPECT_NEAR(std::abs(y - 50.0), std::pow(0.8, t) * 10.0, 1e-12);
    }
}

TEST(Proposal, PartsSumToValue) {
    auto s = make_spec("x", 50, 0, 100);
    s.inertia = 0.5;
    const auto p = propose_value(s, 55.0, {2, 0.3}, {1, 0.3}, 1.5, -0.25);
    EXPECT_DOUBLE_EQ(p.baseline + p.ar_residual + p.event_delta + p.noise, p.value);
    EXPECT_DOUBLE_EQ(p.ar_residual, 2.5);
}

TEST(Projection, ClampsToRangeAndSlope) {
    auto s = make_spec("x", 50, 0, 100);
    s.slope_limit = 5.0;
    auto p = project(120.0, 98.0, s);
    EXPECT_DOUBLE_EQ(p.value, 100.0);
    EXPECT_TRUE(p.range_violated);
    EXPECT_TRUE(p.slope_violated);
    EXPECT_TRUE(p.clipped);
    p = project(40.0, 50.0, s);
    EXPECT_DOUBLE_EQ(p.value, 45.0);
    EXPECT_FALSE(p.range_violated);
    EXPECT_TRUE(p.slope_violated);
    p = project(52.0, 50.0, s);
    EXPECT_DOUBLE_EQ(p.value, 52.0);
    EXPECT_FALSE(p.clipped);
}

TEST(Projection, FlagsMatchClippingOnRandomInputs) {
    auto s = make_spec("x", 50, 0, 100);
    s.slope_limit = 3.0;
    Stream r(5);
    for (int i = 0; i < 20000; ++i) {
        const double prev = r.uniform(0, 100), prop = r.uniform(-50, 150);
        const auto p = project(prop, prev, s);
        EXPECT_EQ(p.clipped, p.range_violated || p.slope_violated);
        EXPECT_GE(p.value, 0.0);
        EXPECT_LE(p.value, 100.0);
        EXPECT_LE(std::abs(p.value - prev), 3.0 + 1e-12);
    }
}

TEST(Noise, IdentityCovarianceWithoutFactors) {
    const NoiseModel nm(3, 0, {}, {1.0, 1.0, 1.0});
    double c01 = 0, c00 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        Stream s = make_stream(1, "t", i);
        const auto e = draw_noise(nm, s);
        c00 += e[0] * e[0];
        c01 += e[0] * e[1];
    }
    EXPECT_NEAR(c00 / n, 1.0, 0.05);
    EXPECT_NEAR(c01 / n, 0.0, 0.05);
}

TEST(Noise, FromSpecsUsesGlobalPlusGroupFactors) {
    auto a = make_spec("a", 1, 0, 2), b = make_spec("b", 1, 0, 2), c = make_spec("c", 1, 0, 2);
    a.group = IndicatorGroup::sleep;
    b.group = IndicatorGroup::sleep;
    c.group = IndicatorGroup::activity;
    a.noise_loadings = {0.2, 0.3};
    b.noise_loadings = {0.1, 0.4};
    c.noise_loadings = {0.5, 0.6};
    const std::vector<IndicatorSpec> specs{a, b, c};
    const auto nm = NoiseModel::from_specs(specs);
    EXPECT_EQ(nm.rank(), 3);
    const auto cov = nm.covariance();
    EXPECT_NEAR(cov[0 * 3 + 1], 0.2 * 0.1 + 0.3 * 0.4, 1e-15); // shared group
    EXPECT_NEAR(cov[0 * 3 + 2], 0.2 * 0.5, 1e-15);             // global only
    EXPECT_NEAR(cov[2 * 3 + 2], 0.25 + 0.36 + 0.01, 1e-15);
    EXPECT_THROW(NoiseModel(2, 8, std::vector<double>(16, 0.0), {1, 1}), std::invalid_argument);
}
