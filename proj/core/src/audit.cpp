#include "hsynth/audit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hsynth/exams.hpp"
#include "json.hpp"

namespace hsynth {

namespace {

double ratio(long num, long den, double empty = 0.0) {
    return den == 0 ? empty : static_cast<double>(num) / static_cast<double>(den);
}

std::string percent(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << v * 100.0 << '%';
    return os.str();
}

} // namespace

AuditReport audit_bundle(const UserBundle& b) {
    AuditReport r;
    const int horizon = b.plan.horizon_days;

    // conformance: every keyed record resolves to a canonical key with a unit
    long keyed = 0, with_key = 0, with_unit = 0;
    auto record = [&](const std::string& key, const std::string& unit) {
        ++keyed;
        const auto* spec = b.indicator(key);
        if (spec) ++with_key;
        if (spec && !unit.empty() && unit == spec->unit) ++with_unit;
    };
    for (const auto& [key, series] : b.device) {
        const auto* spec = b.indicator(key);
        for (std::size_t t = 0; t < series.days.size(); ++t) record(key, spec ? spec->unit : std::string());
    }
    for (const auto& x : b.exams) {
        for (const auto& res : x.results) record(res.indicator_key, res.unit);
    }
    for (const auto& e : b.events) {
        for (const auto& imp : e.impacts) {
            const auto* spec = b.indicator(imp.indicator_key);
            record(imp.indicator_key, spec ? spec->unit : std::string());
        }
    }
    r.keyed_records = keyed;
    r.key_presence_rate = ratio(with_key, keyed, 1.0);
    r.unit_presence_rate = ratio(with_unit, keyed, 1.0);

    // completeness and plausibility counters
    const int windows = horizon > 0 ? (horizon + kAuditWindowDays - 1) / kAuditWindowDays : 0;
    r.by_window.resize(static_cast<std::size_t>(windows));
    for (int w = 0; w < windows; ++w) {
        r.by_window[static_cast<std::size_t>(w)].start_day = w * kAuditWindowDays;
        r.by_window[static_cast<std::size_t>(w)].end_day = std::min(horizon, (w + 1) * kAuditWindowDays);
    }
    std::vector<char> day_has_value(static_cast<std::size_t>(std::max(horizon, 0)), 0);
    bool logs_complete = true;
    for (const auto& [key, series] : b.device) {
        AuditCounts& ind = r.by_indicator[key];
        for (std::size_t t = 0; t < series.days.size(); ++t) {
            const auto& d = series.days[t];
            AuditCounts c;
            c.indicator_days = 1;
            if (d.value) {
                c.numeric = 1;
                if (t < day_has_value.size()) day_has_value[t] = 1;
            } else {
                c.absent = 1;
                if (d.absent_reason) ++r.absence_counts[std::string(to_string(*d.absent_reason))];
            }
            if (d.log) {
                c.logged_days = 1;
                c.range_violations = d.log->range_violated ? 1 : 0;
                c.slope_violations = d.log->slope_violated ? 1 : 0;
                c.clipped = d.log->clipped ? 1 : 0;
            } else {
                logs_complete = false;
            }
            ind += c;
            r.totals += c;
            const auto w = static_cast<std::size_t>(t) / kAuditWindowDays;
            if (w < r.by_window.size()) r.by_window[w].counts += c;
        }
    }
    long covered = 0;
    for (char c : day_has_value) covered += c;
    r.device_day_coverage = ratio(covered, horizon);
    r.indicator_numeric_coverage = ratio(r.totals.numeric, r.totals.indicator_days);

    r.plausibility_available = logs_complete && !b.device.empty();
    if (r.plausibility_available) {
        r.range_violation_rate_pre = ratio(r.totals.range_violations, r.totals.indicator_days);
        r.slope_violation_rate_pre = ratio(r.totals.slope_violations, r.totals.indicator_days);
        r.clipping_rate_post = ratio(r.totals.clipped, r.totals.indicator_days);
    }

    // exam-device agreement on overlap indicators with a populated window
    for (const auto& x : b.exams) {
        for (const auto& res : x.results) {
            const auto* spec = b.indicator(res.indicator_key);
            if (!spec || !spec->overlap() || !spec->reference_range) continue;
            auto it = b.device.find(spec->key);
            if (it == b.device.end()) continue;
            auto ref = window_stat(it->second, *spec, x.visit_day);
            if (!ref) continue;
            ++r.exam_overlap_checked;
            const double bound = kConsistencySigmas * exam_noise_sd(*spec);
            if (std::abs(res.value - *ref) <= bound * (1.0 + 1e-12)) ++r.exam_overlap_consistent;
        }
    }
    r.exam_device_consistency = ratio(r.exam_overlap_consistent, r.exam_overlap_checked, 1.0);
    return r;
}

CohortAudit aggregate_audits(const std::vector<AuditReport>& reports) {
    CohortAudit c;
    c.users = static_cast<int>(reports.size());
    int plausible = 0;
    for (const auto& r : reports) {
        c.key_presence_rate += r.key_presence_rate;
        c.unit_presence_rate += r.unit_presence_rate;
        c.device_day_coverage += r.device_day_coverage;
        c.indicator_numeric_coverage += r.indicator_numeric_coverage;
        if (!r.plausibility_available) {
            ++c.plausibility_unavailable;
            continue;
        }
        ++plausible;
        c.range_violation_rate_pre += r.range_violation_rate_pre;
        c.slope_violation_rate_pre += r.slope_violation_rate_pre;
        c.clipping_rate_post += r.clipping_rate_post;
        c.exam_device_consistency += r.exam_device_consistency;
    }
    if (c.users > 0) {
        c.key_presence_rate /= c.users;
        c.unit_presence_rate /= c.users;
        c.device_day_coverage /= c.users;
        c.indicator_numeric_coverage /= c.users;
    }
    if (plausible > 0) {
        c.range_violation_rate_pre /= plausible;
        c.slope_violation_rate_pre /= plausible;
        c.clipping_rate_post /= plausible;
        c.exam_device_consistency /= plausible;
    }
    return c;
}

std::string render_audit_table(const CohortAudit& c) {
    std::ostringstream os;
    auto row = [&](const std::string& label, const std::string& value) {
        os << "  " << label << std::string(label.size() < 48 ? 48 - label.size() : 1, ' ') << value << '\n';
    };
    os << "Aggregated audit metrics (means across " << c.users << " users)\n";
    os << "Conformance\n";
    row("Canonical key presence", percent(c.key_presence_rate));
    row("UCUM unit presence", percent(c.unit_presence_rate));
    os << "Completeness\n";
    row("Device-day coverage", percent(c.device_day_coverage));
    row("Indicator numeric coverage", percent(c.indicator_numeric_coverage));
    os << "Plausibility\n";
    row("Range violation rate (pre-projection)", percent(c.range_violation_rate_pre));
    row("Slope violation rate (pre-projection)", percent(c.slope_violation_rate_pre));
    row("Clipping rate (post-projection)", percent(c.clipping_rate_post));
    row("Exam-device consistency (overlap indicators)", percent(c.exam_device_consistency));
    if (c.plausibility_unavailable > 0) {
        os << "  (" << c.plausibility_unavailable << " users without decomposition logs excluded from plausibility)\n";
    }
    return os.str();
}

std::string cohort_audit_to_json(const CohortAudit& c) {
    nlohmann::ordered_json j{{"users", c.users},
                             {"key_presence_rate", c.key_presence_rate},
                             {"unit_presence_rate", c.unit_presence_rate},
                             {"device_day_coverage", c.device_day_coverage},
                             {"indicator_numeric_coverage", c.indicator_numeric_coverage},
                             {"range_violation_rate_pre", c.range_violation_rate_pre},
                             {"slope_violation_rate_pre", c.slope_violation_rate_pre},
                             {"clipping_rate_post", c.clipping_rate_post},
                             {"exam_device_consistency", c.exam_device_consistency},
                             {"plausibility_unavailable", c.plausibility_unavailable}};
    return j.dump(2) + "\n";
}

} // namespace hsynth
