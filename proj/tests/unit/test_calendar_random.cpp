#include <gtest/gtest.h>

#include <set>

#include "hsynth/calendar.hpp"
#include "hsynth/random.hpp"

using namespace hsynth;

TEST(Calendar, DatesAndWeekdays) {
    const Calendar cal("2022-01-03");
    EXPECT_EQ(cal.date(0), "2022-01-03");
    EXPECT_EQ(cal.weekday(0), 1); // Monday
    EXPECT_EQ(cal.weekday(6), 0); // Sunday
    EXPECT_EQ(cal.date(29), "2022-02-01");
    EXPECT_EQ(cal.date(422), "2023-03-01"); // 2023 is not a leap year
    EXPECT_EQ(cal.month(29), "2022-02");
    EXPECT_EQ(cal.day_of("2022-02-01"), 29);
    EXPECT_EQ(cal.day_of("2021-12-31"), -3);
}

TEST(Calendar, MonthOrdinalsAreAdjacent) {
    const Calendar cal("2022-11-15");
    EXPECT_EQ(cal.month_ordinal(cal.day_of("2023-01-01")) - cal.month_ordinal(cal.day_of("2022-12-31")), 1);
    EXPECT_EQ(month_label(cal.month_ordinal(0)), "2022-11");
}

TEST(Calendar, LeapDayAndYearFraction) {
    const Calendar cal("2024-02-28");
    EXPECT_EQ(cal.date(1), "2024-02-29");
    const auto d = cal.at(0);
    EXPECT_GE(d.year_fraction, 0.0);
    EXPECT_LT(d.year_fraction, 1.0);
}

TEST(Calendar, RejectsMalformedDates) {
    EXPECT_THROW(Calendar("2022-13-01"), std::invalid_argument);
    EXPECT_THROW(Calendar("2022-02-30"), std::invalid_argument);
    EXPECT_THROW(Calendar("20220101"), std::invalid_argument);
    EXPECT_THROW(parse_iso_date(""), std::invalid_argument);
}

TEST(Random, StreamsAreKeyedNotOrdered) {
    Stream a = make_stream(7, "noise", 3, "steps");
    Stream b = make_stream(7, "noise", 3, "steps");
    Stream c = make_stream(7, "noise", 4, "steps");
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(StreamKey({7, "noise", 3, "steps"}).digest(), StreamKey({7, "noise", 3, "hr"}).digest());
}

TEST(Random, UserSeedsAreDistinct) {
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(derive_user_seed(42, static_cast<std::uint64_t>(i)));
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_EQ(derive_user_seed(42, 3), derive_user_seed(42, 3));
    EXPECT_NE(derive_user_seed(42, 3), derive_user_seed(43, 3));
}

TEST(Random, DistributionsRespectBounds) {
    Stream s(123);
    for (int i = 0; i < 10000; ++i) {
        const int k = s.uniform_int(-2, 5);
        EXPECT_GE(k, -2);
        EXPECT_LE(k, 5);
        const double u = s.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LE(std::abs(s.truncated_normal(2.0)), 2.0);
    }
}

TEST(Random, BernoulliFrequency) {
    Stream s(9);
    int hits = 0;
    for (int i = 0; i < 100000; ++i) hits += s.bernoulli(0.3);
    EXPECT_NEAR(hits / 100000.0, 0.3, 0.01);
}
