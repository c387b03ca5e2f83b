#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hsynth/audit.hpp"

using namespace hsynth;
using hsynth::fixtures::linear_bundle;
using hsynth::fixtures::small_cohort;

TEST(Audit, HandCountedBundle) {
    UserBundle b = linear_bundle();
    auto& steps = b.device["steps"].days;
    // 12 absent days, 3 range and 2 slope violations, 4 clipped days
    for (int t = 0; t < 12; ++t) {
        steps[t * 10].value.reset();
        steps[t * 10].absent_reason = AbsenceReason::device_not_worn;
    }
    for (int t : {5, 95, 115}) steps[t].log->range_violated = true;
    for (int t : {6, 96}) steps[t].log->slope_violated = true;
    for (int t : {5, 6, 7, 8}) steps[t].log->clipped = true;

    const auto r = audit_bundle(b);
    EXPECT_EQ(r.totals.indicator_days, 240);
    EXPECT_EQ(r.totals.absent, 12);
    EXPECT_EQ(r.totals.numeric, 228);
    EXPECT_DOUBLE_EQ(r.indicator_numeric_coverage, 228.0 / 240.0);
    EXPECT_DOUBLE_EQ(r.device_day_coverage, 1.0); // hr covers every day
    EXPECT_DOUBLE_EQ(r.range_violation_rate_pre, 3.0 / 240.0);
    EXPECT_DOUBLE_EQ(r.slope_violation_rate_pre, 2.0 / 240.0);
    EXPECT_DOUBLE_EQ(r.clipping_rate_post, 4.0 / 240.0);
    EXPECT_EQ(r.absence_counts.at("device_not_worn"), 12);
    EXPECT_EQ(r.by_indicator.at("hr").range_violations, 0);
    EXPECT_EQ(r.by_indicator.at("steps").range_violations, 3);

    ASSERT_EQ(r.by_window.size(), 2u);
    EXPECT_EQ(r.by_window[0].end_day, 90);
    EXPECT_EQ(r.by_window[1].end_day, 120);
    EXPECT_EQ(r.by_window[0].counts.range_violations, 1);
    EXPECT_EQ(r.by_window[1].counts.range_violations, 2);
    AuditCounts sum;
    for (const auto& w : r.by_window) sum += w.counts;
    EXPECT_EQ(sum, r.totals);
}

TEST(Audit, ConformanceCountsUnknownKeysAndUnits) {
    UserBundle b = linear_bundle();
    b.exams[0].results[0].unit = "";
    // events reference "sleep", which this bundle does not define
    const auto r = audit_bundle(b);
    const long records = 240 + 6 + 5;
    EXPECT_EQ(r.keyed_records, records);
    EXPECT_DOUBLE_EQ(r.key_presence_rate, (records - 1.0) / records);
    EXPECT_DOUBLE_EQ(r.unit_presence_rate, (records - 2.0) / records);
}

TEST(Audit, MissingLogsMarkPlausibilityUnavailable) {
    UserBundle b = linear_bundle();
    b.device["hr"].days[3].log.reset();
    const auto r = audit_bundle(b);
    EXPECT_FALSE(r.plausibility_available);
    EXPECT_DOUBLE_EQ(r.range_violation_rate_pre, 0.0);

    const auto c = aggregate_audits({r, audit_bundle(linear_bundle())});
    EXPECT_EQ(c.users, 2);
    EXPECT_EQ(c.plausibility_unavailable, 1);
    EXPECT_DOUBLE_EQ(c.exam_device_consistency, 1.0);
}

TEST(Audit, GeneratedCohortIsClean) {
    std::vector<AuditReport> reports;
    for (const auto& b : small_cohort()) reports.push_back(audit_bundle(b));
    const auto c = aggregate_audits(reports);
    EXPECT_DOUBLE_EQ(c.key_presence_rate, 1.0);
    EXPECT_DOUBLE_EQ(c.unit_presence_rate, 1.0);
    EXPECT_DOUBLE_EQ(c.device_day_coverage, 1.0);
    EXPECT_DOUBLE_EQ(c.range_violation_rate_pre, 0.0);
    EXPECT_DOUBLE_EQ(c.slope_violation_rate_pre, 0.0);
    EXPECT_DOUBLE_EQ(c.clipping_rate_post, 0.0);
    const auto table = render_audit_table(c);
    EXPECT_NE(table.find("Range violation rate (pre-projection)"), std::string::npos);
    EXPECT_NE(table.find("100.0%"), std::string::npos);
}
