#include "hsynth/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace hsynth {

namespace {

template <class E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Sex, 2> kSex{{{Sex::male, "male"}, {Sex::female, "female"}}};
constexpr NameTable<AgeStratum, 3> kStratum{
    {{AgeStratum::young, "18-44"}, {AgeStratum::middle, "45-64"}, {AgeStratum::senior, "65+"}}};
constexpr NameTable<IndicatorGroup, 6> kGroup{{{IndicatorGroup::sleep, "sleep"},
                                               {IndicatorGroup::cardiovascular, "cardiovascular"},
                                               {IndicatorGroup::metabolic, "metabolic"},
                                               {IndicatorGroup::activity, "activity"},
                                               {IndicatorGroup::weight, "weight"},
                                               {IndicatorGroup::blood_oxygen, "blood_oxygen"}}};
constexpr NameTable<Transform, 3> kTransform{
    {{Transform::identity, "identity"}, {Transform::log, "log"}, {Transform::logit, "logit"}}};
constexpr NameTable<SpeedClass, 2> kSpeed{{{SpeedClass::fast, "fast"}, {SpeedClass::slow, "slow"}}};
constexpr NameTable<EventCategory, 4> kCategory{{{EventCategory::diet_change, "diet_change"},
                                                 {EventCategory::exercise_change, "exercise_change"},
                                                 {EventCategory::health_event, "health_event"},
                                                 {EventCategory::long_term_habit, "long_term_habit"}}};
constexpr NameTable<AbsenceReason, 3> kAbsence{{{AbsenceReason::device_not_worn, "device_not_worn"},
                                                {AbsenceReason::sensor_error, "sensor_error"},
                                                {AbsenceReason::scheduled_gap, "scheduled_gap"}}};
constexpr NameTable<ExamStatus, 2> kStatus{{{ExamStatus::normal, "normal"}, {ExamStatus::abnormal, "abnormal"}}};
constexpr NameTable<Dimension, 5> kDimension{{{Dimension::Lookup, "Lookup"},
                                              {Dimension::Trend, "Trend"},
                                              {Dimension::Comparison, "Comparison"},
                                              {Dimension::Anomaly, "Anomaly"},
                                              {Dimension::Explanation, "Explanation"}}};
constexpr NameTable<Tier, 3> kTier{{{Tier::Easy, "Easy"}, {Tier::Medium, "Medium"}, {Tier::Hard, "Hard"}}};
constexpr NameTable<AnswerType, 5> kAnswerType{{{AnswerType::number, "number"},
                                                {AnswerType::date, "date"},
                                                {AnswerType::string, "string"},
                                                {AnswerType::set, "set"},
                                                {AnswerType::ranked_list, "ranked_list"}}};
constexpr NameTable<AnswerSource, 4> kSource{{{AnswerSource::device, "device"},
                                              {AnswerSource::exam, "exam"},
                                              {AnswerSource::event, "event"},
                                              {AnswerSource::derived, "derived"}}};
constexpr NameTable<KernelMode, 2> kKernelMode{
    {{KernelMode::continuous, "continuous"}, {KernelMode::literal, "literal"}}};

template <class E, std::size_t N> std::string_view name_of(const NameTable<E, N>& table, E v) {
    for (const auto& [e, n] : table) {
        if (e == v) return n;
    }
    return "?";
}

template <class E, std::size_t N> E value_of(const NameTable<E, N>& table, std::string_view name) {
    for (const auto& [e, n] : table) {
        if (n == name) return e;
    }
    throw std::invalid_argument("unknown enum value '" + std::string(name) + "'");
}

bool near_le(double a, double b) { return a <= b + 1e-9 * (1.0 + std::abs(b)); }

} // namespace

std::string_view to_string(Sex v) { return name_of(kSex, v); }
std::string_view to_string(AgeStratum v) { return name_of(kStratum, v); }
std::string_view to_string(IndicatorGroup v) { return name_of(kGroup, v); }
std::string_view to_string(Transform v) { return name_of(kTransform, v); }
std::string_view to_string(SpeedClass v) { return name_of(kSpeed, v); }
std::string_view to_string(EventCategory v) { return name_of(kCategory, v); }
std::string_view to_string(AbsenceReason v) { return name_of(kAbsence, v); }
std::string_view to_string(ExamStatus v) { return name_of(kStatus, v); }
std::string_view to_string(Dimension v) { return name_of(kDimension, v); }
std::string_view to_string(Tier v) { return name_of(kTier, v); }
std::string_view to_string(AnswerType v) { return name_of(kAnswerType, v); }
std::string_view to_string(AnswerSource v) { return name_of(kSource, v); }
std::string_view to_string(KernelMode v) { return name_of(kKernelMode, v); }

template <> Sex parse_enum<Sex>(std::string_view n) { return value_of(kSex, n); }
template <> AgeStratum parse_enum<AgeStratum>(std::string_view n) { return value_of(kStratum, n); }
template <> IndicatorGroup parse_enum<IndicatorGroup>(std::string_view n) { return value_of(kGroup, n); }
template <> Transform parse_enum<Transform>(std::string_view n) { return value_of(kTransform, n); }
template <> SpeedClass parse_enum<SpeedClass>(std::string_view n) { return value_of(kSpeed, n); }
template <> EventCategory parse_enum<EventCategory>(std::string_view n) { return value_of(kCategory, n); }
template <> AbsenceReason parse_enum<AbsenceReason>(std::string_view n) { return value_of(kAbsence, n); }
template <> ExamStatus parse_enum<ExamStatus>(std::string_view n) { return value_of(kStatus, n); }
template <> Dimension parse_enum<Dimension>(std::string_view n) { return value_of(kDimension, n); }
template <> Tier parse_enum<Tier>(std::string_view n) { return value_of(kTier, n); }
template <> AnswerType parse_enum<AnswerType>(std::string_view n) { return value_of(kAnswerType, n); }
template <> AnswerSource parse_enum<AnswerSource>(std::string_view n) { return value_of(kSource, n); }
template <> KernelMode parse_enum<KernelMode>(std::string_view n) { return value_of(kKernelMode, n); }

std::pair<int, int> age_bounds(AgeStratum s) {
    switch (s) {
    case AgeStratum::young: return {18, 44};
    case AgeStratum::middle: return {45, 64};
    case AgeStratum::senior: return {65, 90};
    }
    return {18, 90};
}

AgeStratum stratum_of_age(int age) {
    if (age < 45) return AgeStratum::young;
    if (age < 65) return AgeStratum::middle;
    return AgeStratum::senior;
}

void check_indicator_spec(const IndicatorSpec& s) {
    auto fail = [&](const std::string& what) {
        throw std::invalid_argument("indicator '" + s.key + "': " + what);
    };
    if (s.key.empty()) fail("empty key");
    if (s.unit.empty()) fail("missing unit");
    if (!std::isfinite(s.lower) || !std::isfinite(s.upper) || !(s.lower < s.upper)) fail("requires L < U");
    if (!(s.slope_limit > 0.0)) fail("slope limit must be positive");
    if (!(s.soft_cap > 0.0)) fail("soft cap must be positive");
    if (!(s.inertia >= 0.0 && s.inertia < 1.0)) fail("inertia must lie in [0, 1)");
    if (s.transform == Transform::log && s.lower < 0.0) fail("log transform requires L >= 0");
    if (!(s.baseline > s.lower && s.baseline < s.upper)) fail("baseline must lie strictly inside (L, U)");
    if (!(s.idio_variance > 0.0)) fail("idiosyncratic variance must be positive");
    if (s.on_exam) {
        if (!s.reference_range) fail("exam indicator without reference range");
        if (!(s.reference_range->low < s.reference_range->high)) fail("reference range requires lo < hi");
    }
    if (!s.on_device && !s.on_exam) fail("indicator is neither a device nor an exam indicator");
}

double Event::max_tau_fade() const {
    double m = 0.0;
    for (const auto& i : impacts) m = std::max(m, i.tau_fade);
    return m;
}

const EventImpact* Event::impact_on(std::string_view key) const {
    for (const auto& i : impacts) {
        if (i.indicator_key == key) return &i;
    }
    return nullptr;
}

const ExamResult* ExamVisit::result_for(std::string_view key) const {
    for (const auto& r : results) {
        if (r.indicator_key == key) return &r;
    }
    return nullptr;
}

AuditCounts& AuditCounts::operator+=(const AuditCounts& o) {
    indicator_days += o.indicator_days;
    logged_days += o.logged_days;
    range_violations += o.range_violations;
    slope_violations += o.slope_violations;
    clipped += o.clipped;
    numeric += o.numeric;
    absent += o.absent;
    return *this;
}

const IndicatorSpec* UserBundle::indicator(std::string_view key) const {
    for (const auto& s : indicators) {
        if (s.key == key) return &s;
    }
    return nullptr;
}

const Event* UserBundle::event(std::string_view id) const {
    for (const auto& e : events) {
        if (e.event_id == id) return &e;
    }
    return nullptr;
}

int target_phase_count(int horizon_days) {
    int n = static_cast<int>(std::lround(horizon_days / 106.0));
    return std::clamp(n, 4, 20);
}

std::vector<Violation> validate_bundle(const UserBundle& b) {
    std::vector<Violation> out;
    auto add = [&](std::string type, std::string field, std::string locus) {
        out.push_back({std::move(type), std::move(field), std::move(locus)});
    };
    const int horizon = b.plan.horizon_days;

    // presence of the six components
    if (b.profile.user_id.empty()) add("missing_component", "profile.user_id", "");
    if (b.plan.phases.empty()) add("missing_component", "plan.phases", "");
    if (b.device.empty()) add("missing_component", "device", "");
    if (b.seeds.derivation.empty()) add("missing_component", "seeds.derivation", "");
    if (horizon <= 0) add("missing_component", "plan.horizon_days", "");

    // profile
    if (b.profile.age < 18) add("profile", "profile.age", std::to_string(b.profile.age));
    if (stratum_of_age(b.profile.age) != b.profile.age_stratum) {
        add("profile", "profile.age_stratum", std::to_string(b.profile.age));
    }
    if (!std::is_sorted(b.profile.conditions.begin(), b.profile.conditions.end()) ||
        std::adjacent_find(b.profile.conditions.begin(), b.profile.conditions.end()) !=
            b.profile.conditions.end()) {
        add("profile", "profile.conditions", "not a sorted set");
    }

    // plan tiling
    Day cursor = 0;
    for (std::size_t i = 0; i < b.plan.phases.size(); ++i) {
        const auto& p = b.plan.phases[i];
        std::string locus = "phase " + std::to_string(i);
        if (p.index != static_cast<int>(i)) add("plan", "plan.phases.index", locus);
        if (p.start_day != cursor) add("plan_tiling", "plan.phases.start_day", locus);
        if (p.length() < 30) add("plan", "plan.phases.duration", locus);
        cursor = p.end_day;
    }
    if (!b.plan.phases.empty() && cursor != horizon) add("plan_tiling", "plan.phases.end_day", "last phase");
    if (!b.plan.phases.empty() && horizon > 0 &&
        std::abs(static_cast<int>(b.plan.phases.size()) - target_phase_count(horizon)) > 2) {
        add("plan", "plan.phases", "phase count");
    }

    // indicators
    std::set<std::string> keys;
    for (const auto& s : b.indicators) {
        try {
            check_indicator_spec(s);
        } catch (const std::invalid_argument& e) {
            add("indicator_spec", "indicators." + s.key, e.what());
        }
        if (!keys.insert(s.key).second) add("indicator_spec", "indicators.key", "duplicate " + s.key);
    }

    // device series
    for (const auto& s : b.indicators) {
        if (!s.on_device) continue;
        auto it = b.device.find(s.key);
        if (it == b.device.end()) {
            add("missing_series", "device." + s.key, s.key);
            continue;
        }
        const auto& days = it->second.days;
        if (static_cast<int>(days.size()) != horizon) {
            add("series_length", "device." + s.key, s.key);
        }
        std::optional<double> prev;
        for (std::size_t t = 0; t < days.size(); ++t) {
            const auto& d = days[t];
            std::string locus = s.key + " day " + std::to_string(t);
            if (d.value.has_value() == d.absent_reason.has_value()) {
                add("absence_code", "device." + s.key + ".absent_reason", locus);
            }
            if (d.value) {
                double v = *d.value;
                if (!std::isfinite(v) || v < s.lower || v > s.upper) {
                    add("range", "device." + s.key + ".value", locus);
                }
                if (prev && !near_le(std::abs(v - *prev), s.slope_limit)) {
                    add("slope", "device." + s.key + ".value", locus);
                }
            }
            prev = d.value;
        }
    }
    for (const auto& [key, series] : b.device) {
        const auto* spec = b.indicator(key);
        if (!spec || !spec->on_device) add("unknown_indicator", "device." + key, key);
        if (series.indicator_key != key) add("series_key", "device." + key + ".indicator_key", key);
    }

    // exams
    Day last_visit = -1;
    for (std::size_t i = 0; i < b.exams.size(); ++i) {
        const auto& x = b.exams[i];
        std::string locus = "exam " + std::to_string(i) + " day " + std::to_string(x.visit_day);
        if (x.visit_day <= last_visit) add("exam_order", "exams.visit_day", locus);
        if (x.visit_day < 0 || x.visit_day >= horizon) add("exam_day", "exams.visit_day", locus);
        last_visit = x.visit_day;
        for (const auto& r : x.results) {
            std::string rl = locus + " " + r.indicator_key;
            const auto* spec = b.indicator(r.indicator_key);
            if (!spec || !spec->on_exam) {
                add("unknown_indicator", "exams.results.indicator_key", rl);
                continue;
            }
            bool outside = r.value < r.reference_range.low || r.value > r.reference_range.high;
            if (outside != (r.status == ExamStatus::abnormal)) {
                add("status_consistency", "exams.results.status", rl);
            }
            if (r.value < spec->lower || r.value > spec->upper) add("range", "exams.results.value", rl);
            if (r.unit != spec->unit) add("unit", "exams.results.unit", rl);
        }
    }

    // events
    std::set<std::string> ids;
    for (const auto& e : b.events) {
        std::string locus = e.event_id;
        if (!ids.insert(e.event_id).second) add("event", "events.event_id", "duplicate " + locus);
        if (e.impacts.empty()) add("event", "events.impacts", locus);
        if (e.duration < 1) add("event", "events.duration", locus);
        if (e.start_day < 0 || e.start_day >= horizon) add("event", "events.start_day", locus);
        if (e.phase_index < 0 || e.phase_index >= static_cast<int>(b.plan.phases.size())) {
            add("event", "events.phase_index", locus);
        }
        for (const auto& imp : e.impacts) {
            const auto* spec = b.indicator(imp.indicator_key);
            std::string il = locus + " " + imp.indicator_key;
            if (!spec) {
                add("unknown_indicator", "events.impacts.indicator_key", il);
                continue;
            }
            if (std::abs(imp.beta) > 2.0 * spec->soft_cap) add("event", "events.impacts.beta", il);
            if (!(imp.tau_rise > 0.0) || !(imp.tau_fade > 0.0)) add("event", "events.impacts.tau", il);
        }
    }

    // audit
    for (double r : {b.audit.key_presence_rate, b.audit.unit_presence_rate, b.audit.device_day_coverage,
                     b.audit.indicator_numeric_coverage, b.audit.range_violation_rate_pre,
                     b.audit.slope_violation_rate_pre, b.audit.clipping_rate_post,
                     b.audit.exam_device_consistency}) {
        if (!(r >= 0.0 && r <= 1.0)) add("audit", "audit", "rate outside [0,1]");
    }
    return out;
}

} // namespace hsynth
