#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hsynth/catalog.hpp"
#include "hsynth/config.hpp"
#include "hsynth/dynamics.hpp"
#include "hsynth/engine.hpp"
#include "hsynth/model.hpp"

namespace hsynth::fixtures {

inline IndicatorSpec make_spec(const std::string& key, double baseline, double lower, double upper) {
    IndicatorSpec s;
    s.key = key;
    s.unit = "1";
    s.baseline = baseline;
    s.lower = lower;
    s.upper = upper;
    s.slope_limit = upper - lower;
    s.soft_cap = 50.0;
    s.noise_loadings = {0.1, 0.1};
    s.idio_variance = 0.01;
    return s;
}

/// Small default-config cohort shared by tests that only read bundles.
inline const std::vector<UserBundle>& small_cohort() {
    static const std::vector<UserBundle> cohort = [] {
        GeneratorConfig cfg;
        cfg.users = 3;
        cfg.root_seed = 11;
        cfg.horizon_min = 400;
        cfg.horizon_max = 700;
        return Generator(cfg, builtin_catalogs()).generate_cohort(1);
    }();
    return cohort;
}

inline Event make_event(const std::string& id, Day start, int duration, std::vector<EventImpact> impacts) {
    Event e;
    e.event_id = id;
    e.name = id;
    e.catalog_id = id;
    e.start_day = start;
    e.duration = duration;
    e.impacts = std::move(impacts);
    return e;
}

/// Hand-built 120-day bundle starting Monday 2022-01-03. Device series
/// "steps" equals the day index; "hr" is constant 60. Logs carry the event
/// drive of the listed events so attribution queries resolve.
inline UserBundle linear_bundle() {
    UserBundle b;
    b.profile.user_id = "user-9000";
    b.profile.age = 40;
    b.plan.epoch = "2022-01-03";
    b.plan.horizon_days = 120;
    b.plan.phases = {{0, "p0", 0, 120, "maintenance"}};
    b.seeds.derivation = "test";

    auto steps = make_spec("steps", 100.0, -1000.0, 1000.0);
    steps.unit = "/d";
    steps.reference_range = ReferenceRange{20.0, 80.0};
    auto hr = make_spec("hr", 60.0, 30.0, 200.0);
    hr.unit = "/min";
    auto hba1c = make_spec("hba1c", 5.2, 3.0, 15.0);
    hba1c.unit = "%";
    hba1c.on_device = false;
    hba1c.on_exam = true;
    hba1c.reference_range = ReferenceRange{4.0, 5.6};
    auto ldl = make_spec("ldl", 110.0, 20.0, 300.0);
    ldl.unit = "mg/dL";
    ldl.on_device = false;
    ldl.on_exam = true;
    ldl.reference_range = ReferenceRange{0.0, 130.0};
    b.indicators = {steps, hr, hba1c, ldl};

    b.events = {make_event("evt-A", 50, 10, {{"steps", 5.0, 2.0, 6.0}, {"hr", -3.0, 2.0, 6.0}}),
                make_event("evt-B", 60, 5, {{"hr", 2.0, 2.0, 4.0}}),
                make_event("evt-C", 100, 8, {{"steps", -4.0, 3.0, 5.0}, {"sleep", 1.0, 1.0, 1.0}})};

    for (const auto* spec : {&b.indicators[0], &b.indicators[1]}) {
        DeviceSeries s;
        s.indicator_key = spec->key;
        for (Day t = 0; t < 120; ++t) {
            double u = 0.0;
            for (const auto& e : b.events) {
                if (const auto* imp = e.impact_on(spec->key)) u += imp->beta * eval_kernel(e, *imp, t, KernelMode::continuous);
            }
            Decomposition log;
            log.event_raw = u;
            log.event_delta = soft_cap(u, spec->soft_cap);
            log.value = spec->key == "steps" ? t : 60.0;
            log.proposal = log.value;
            log.proposal_natural = log.value;
            log.baseline = log.value - log.event_delta;
            DeviceDay d;
            d.value = log.value;
            d.log = log;
            s.days.push_back(d);
        }
        b.device[spec->key] = s;
    }

    auto result = [&](const IndicatorSpec& s, double v) {
        return ExamResult{s.key, v, s.unit, *s.reference_range, (v < s.reference_range->low || v > s.reference_range->high) ? ExamStatus::abnormal : ExamStatus::normal};
    };
    b.exams = {{30, {result(hba1c, 5.0), result(ldl, 120.0)}, ""},
               {60, {result(hba1c, 6.0), result(ldl, 140.0)}, ""},
               {90, {result(hba1c, 6.5), result(ldl, 150.0)}, ""}};
    return b;
}

} // namespace hsynth::fixtures
