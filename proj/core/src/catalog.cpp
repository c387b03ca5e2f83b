#include "hsynth/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hsynth/dynamics.hpp"

namespace hsynth {

namespace {

struct Physiology {
    const char* key;
    const char* unit;
    IndicatorGroup group;
    Transform transform;
    double baseline;
    double lower;
    double upper;
    double slope_limit;
    double soft_cap;
    double inertia;
    double global_loading;
    double group_loading;
    double idio_sd;
    SpeedClass speed;
};

IndicatorTemplate make(const Physiology& p, double person_sd) {
    IndicatorTemplate t;
    auto& s = t.spec;
    s.key = p.key;
    s.unit = p.unit;
    s.group = p.group;
    s.transform = p.transform;
    s.baseline = p.baseline;
    s.lower = p.lower;
    s.upper = p.upper;
    s.slope_limit = p.slope_limit;
    s.soft_cap = p.soft_cap;
    s.inertia = p.inertia;
    s.noise_loadings = {p.global_loading, p.group_loading};
    s.idio_variance = p.idio_sd * p.idio_sd;
    s.speed_class = p.speed;
    t.person_sd = person_sd;
    return t;
}

IndicatorTemplate& exam(IndicatorTemplate& t, double lo, double hi) {
    t.spec.on_exam = true;
    t.spec.reference_range = ReferenceRange{lo, hi};
    return t;
}

IndicatorTemplate exam_only(IndicatorTemplate t, double lo, double hi) {
    t.spec.on_device = false;
    exam(t, lo, hi);
    return t;
}

// Sunday..Saturday
constexpr std::array<double, 7> weekend(double weekend_shift, double weekday_shift) {
    return {weekend_shift, weekday_shift, weekday_shift, weekday_shift, weekday_shift, weekday_shift,
            weekend_shift};
}

using IG = IndicatorGroup;
using TF = Transform;
using SC = SpeedClass;

ImpactTemplate impact(const char* key, double beta_lo, double beta_hi, double rise_lo, double rise_hi,
                      double fade_lo, double fade_hi) {
    return {key, {beta_lo, beta_hi}, {rise_lo, rise_hi}, {fade_lo, fade_hi}};
}

double sex_shift_sign(Sex s) { return s == Sex::male ? 1.0 : -1.0; }

} // namespace

std::vector<IndicatorTemplate> builtin_indicators() {
    std::vector<IndicatorTemplate> out;

    // sleep
    auto sleep = make({"sleep_duration", "h", IG::sleep, TF::identity, 7.0, 2.0, 14.0, 6.0, 1.0, 0.4, 0.08, 0.15,
                       0.25, SC::fast},
                      0.4);
    sleep.spec.weekday_offsets = weekend(0.45, -0.1);
    sleep.age_shift_per_decade = -0.1;
    sleep.condition_shift = {{"depression", -0.5}, {"insomnia", -0.8}};
    out.push_back(sleep);

    auto deep = make({"deep_sleep_ratio", "%", IG::sleep, TF::logit, 18.0, 2.0, 60.0, 25.0, 0.4, 0.3, 0.03, 0.08,
                      0.15, SC::fast},
                     3.0);
    deep.age_shift_per_decade = -1.0;
    deep.condition_shift = {{"insomnia", -4.0}, {"depression", -2.0}};
    out.push_back(deep);

    auto eff = make({"sleep_efficiency", "%", IG::sleep, TF::logit, 88.0, 40.0, 100.0, 30.0, 0.4, 0.3, 0.03, 0.08,
                     0.15, SC::fast},
                    3.0);
    eff.age_shift_per_decade = -1.0;
    eff.condition_shift = {{"depression", -5.0}, {"insomnia", -7.0}};
    out.push_back(eff);

    // cardiovascular
    auto hr = make({"resting_hr", "/min", IG::cardiovascular, TF::identity, 64.0, 35.0, 140.0, 25.0, 5.0, 0.5, 0.5,
                    0.7, 1.1, SC::fast},
                   4.5);
    hr.spec.annual_amplitude = 1.0;
    hr.condition_shift = {{"obesity", 5.0}, {"hypertension", 3.0}, {"cvd", 6.0}, {"depression", 2.0}};
    exam(hr, 50.0, 90.0);
    out.push_back(hr);

    auto hrv = make({"hrv_rmssd", "ms", IG::cardiovascular, TF::log, 42.0, 5.0, 250.0, 150.0, 0.3, 0.5, 0.03, 0.05,
                     0.12, SC::fast},
                    8.0);
    hrv.age_shift_per_decade = -3.0;
    hrv.condition_shift = {{"depression", -6.0}, {"cvd", -10.0}};
    out.push_back(hrv);

    auto sbp = make({"systolic_bp", "mm[Hg]", IG::cardiovascular, TF::identity, 118.0, 60.0, 230.0, 45.0, 10.0, 0.5,
                     0.6, 1.2, 2.5, SC::fast},
                    7.0);
    sbp.spec.annual_amplitude = 2.0;
    sbp.age_shift_per_decade = 3.0;
    sbp.condition_shift = {{"hypertension", 20.0}, {"obesity", 5.0}, {"metabolic_syndrome", 8.0}, {"cvd", 6.0},
                           {"ckd", 8.0}};
    exam(sbp, 90.0, 129.0);
    out.push_back(sbp);

    auto dbp = make({"diastolic_bp", "mm[Hg]", IG::cardiovascular, TF::identity, 76.0, 35.0, 140.0, 30.0, 6.0, 0.5,
                     0.4, 0.8, 1.8, SC::fast},
                    5.0);
    dbp.spec.annual_amplitude = 1.0;
    dbp.age_shift_per_decade = 1.0;
    dbp.condition_shift = {{"hypertension", 11.0}, {"metabolic_syndrome", 4.0}, {"ckd", 4.0}};
    exam(dbp, 60.0, 84.0);
    out.push_back(dbp);

    // metabolic
    auto glu = make({"fasting_glucose", "mg/dL", IG::metabolic, TF::log, 92.0, 30.0, 450.0, 120.0, 0.2, 0.5, 0.01,
                     0.03, 0.06, SC::fast},
                    6.0);
    glu.age_shift_per_decade = 1.5;
    glu.condition_shift = {{"t2dm", 45.0}, {"prediabetes", 14.0}, {"metabolic_syndrome", 12.0}, {"obesity", 6.0}};
    exam(glu, 70.0, 99.0);
    out.push_back(glu);

    // activity
    auto steps = make({"steps", "/d", IG::activity, TF::log, 7500.0, 100.0, 100000.0, 50000.0, 0.5, 0.3, 0.06, 0.1,
                       0.2, SC::fast},
                      1800.0);
    steps.spec.weekday_offsets = weekend(-900.0, 250.0);
    steps.spec.annual_amplitude = 600.0;
    steps.age_shift_per_decade = -400.0;
    steps.condition_shift = {{"obesity", -2000.0}, {"depression", -1500.0}, {"cvd", -2000.0},
                             {"osteoarthritis", -2500.0}};
    out.push_back(steps);

    auto energy = make({"active_energy", "kcal/d", IG::activity, TF::log, 450.0, 20.0, 5000.0, 2500.0, 0.4, 0.3,
                        0.06, 0.1, 0.2, SC::fast},
                       90.0);
    energy.spec.weekday_offsets = weekend(-40.0, 15.0);
    energy.age_shift_per_decade = -20.0;
    energy.condition_shift = {{"osteoarthritis", -80.0}, {"depression", -60.0}};
    out.push_back(energy);

    auto exercise = make({"exercise_minutes", "min/d", IG::activity, TF::log, 25.0, 0.2, 600.0, 300.0, 0.8, 0.2,
                          0.06, 0.1, 0.25, SC::fast},
                         8.0);
    exercise.age_shift_per_decade = -1.0;
    exercise.condition_shift = {{"depression", -8.0}, {"osteoarthritis", -10.0}, {"obesity", -5.0}};
    out.push_back(exercise);

    // weight
    auto weight = make({"body_weight", "kg", IG::weight, TF::identity, 72.0, 30.0, 250.0, 3.0, 0.25, 0.95, 0.02,
                        0.05, 0.12, SC::slow},
                       9.0);
    weight.condition_shift = {{"obesity", 28.0}, {"t2dm", 12.0}, {"metabolic_syndrome", 15.0}, {"prediabetes", 8.0},
                              {"osteoarthritis", 6.0}};
    exam(weight, 45.0, 95.0);
    out.push_back(weight);

    auto fat = make({"body_fat_pct", "%", IG::weight, TF::logit, 27.0, 3.0, 65.0, 3.0, 0.05, 0.95, 0.005, 0.01,
                     0.02, SC::slow},
                    4.0);
    fat.age_shift_per_decade = 1.0;
    fat.condition_shift = {{"obesity", 10.0}, {"metabolic_syndrome", 6.0}, {"t2dm", 4.0}};
    exam(fat, 10.0, 32.0);
    out.push_back(fat);

    // blood oxygen
    auto spo2 = make({"spo2", "%", IG::blood_oxygen, TF::logit, 97.0, 80.0, 100.0, 8.0, 0.5, 0.4, 0.05, 0.12, 0.2,
                      SC::fast},
                     0.6);
    spo2.age_shift_per_decade = -0.2;
    spo2.condition_shift = {{"cvd", -0.8}};
    exam(spo2, 95.0, 100.0);
    out.push_back(spo2);

    auto resp = make({"respiratory_rate", "/min", IG::blood_oxygen, TF::identity, 14.0, 6.0, 40.0, 8.0, 2.0, 0.4,
                      0.1, 0.2, 0.4, SC::fast},
                     1.0);
    resp.condition_shift = {{"cvd", 1.0}, {"obesity", 0.5}};
    out.push_back(resp);

    // exam-only laboratory panel
    auto hba1c = make({"hba1c", "%", IG::metabolic, TF::logit, 5.3, 3.5, 18.0, 2.0, 0.4, 0.0, 0.0, 0.0, 0.1, SC::slow},
                      0.25);
    hba1c.condition_shift = {{"prediabetes", 0.6}, {"t2dm", 2.0}, {"metabolic_syndrome", 0.3}};
    out.push_back(exam_only(hba1c, 4.0, 5.6));

    auto ldl = make({"ldl", "mg/dL", IG::metabolic, TF::log, 110.0, 20.0, 400.0, 60.0, 0.25, 0.0, 0.0, 0.0, 0.1,
                     SC::slow},
                    18.0);
    ldl.age_shift_per_decade = 3.0;
    ldl.condition_shift = {{"cvd", 30.0}, {"metabolic_syndrome", 15.0}};
    out.push_back(exam_only(ldl, 40.0, 129.0));

    auto hdl = make({"hdl", "mg/dL", IG::metabolic, TF::log, 52.0, 10.0, 150.0, 30.0, 0.2, 0.0, 0.0, 0.0, 0.1,
                     SC::slow},
                    7.0);
    hdl.sex_shift = -5.0;
    hdl.condition_shift = {{"obesity", -8.0}, {"metabolic_syndrome", -10.0}, {"t2dm", -4.0}};
    out.push_back(exam_only(hdl, 40.0, 100.0));

    auto tg = make({"triglycerides", "mg/dL", IG::metabolic, TF::log, 115.0, 20.0, 1500.0, 200.0, 0.4, 0.0, 0.0, 0.0,
                    0.1, SC::slow},
                   22.0);
    tg.condition_shift = {{"obesity", 40.0}, {"t2dm", 50.0}, {"metabolic_syndrome", 60.0}};
    out.push_back(exam_only(tg, 35.0, 149.0));

    auto creat = make({"creatinine", "mg/dL", IG::metabolic, TF::log, 0.9, 0.2, 15.0, 1.0, 0.2, 0.0, 0.0, 0.0, 0.1,
                       SC::slow},
                      0.1);
    creat.sex_shift = 0.08;
    creat.condition_shift = {{"ckd", 0.8}, {"t2dm", 0.1}};
    out.push_back(exam_only(creat, 0.6, 1.2));

    auto alt = make({"alt", "U/L", IG::metabolic, TF::log, 24.0, 3.0, 1000.0, 60.0, 0.4, 0.0, 0.0, 0.0, 0.1, SC::slow},
                    5.0);
    alt.condition_shift = {{"obesity", 8.0}, {"metabolic_syndrome", 8.0}};
    out.push_back(exam_only(alt, 7.0, 40.0));

    auto crp = make({"crp", "mg/L", IG::cardiovascular, TF::log, 1.2, 0.05, 300.0, 30.0, 1.5, 0.0, 0.0, 0.0, 0.1,
                     SC::fast},
                    0.4);
    crp.condition_shift = {{"cvd", 2.0}, {"osteoarthritis", 1.5}, {"obesity", 1.5}};
    out.push_back(exam_only(crp, 0.1, 3.0));

    auto hgb = make({"hemoglobin", "g/dL", IG::blood_oxygen, TF::identity, 14.0, 5.0, 22.0, 3.0, 1.5, 0.0, 0.0, 0.0,
                     0.1, SC::slow},
                    0.7);
    hgb.sex_shift = 1.0;
    hgb.condition_shift = {{"ckd", -1.5}};
    out.push_back(exam_only(hgb, 12.0, 17.5));

    // sex differences on device indicators
    for (auto& t : out) {
        if (t.spec.key == "body_weight") t.sex_shift = 8.0;
        if (t.spec.key == "resting_hr") t.sex_shift = -2.0;
        if (t.spec.key == "body_fat_pct") t.sex_shift = -5.0;
        if (t.spec.key == "systolic_bp") t.sex_shift = 3.0;
    }
    return out;
}

EventCatalog builtin_events() {
    using EC = EventCategory;
    const std::vector<std::string> chronic{"t2dm", "hypertension", "prediabetes", "metabolic_syndrome",
                                           "cvd",  "ckd",          "obesity",     "osteoarthritis"};
    EventCatalog c;
    auto add = [&](CatalogEntry e) { c.entries.push_back(std::move(e)); };

    add({"jogging", EC::exercise_change, "started jogging routine",
         {"exercise_build", "weight_management", "bp_control", "active_lifestyle"}, {}, 0.006, 60.0, 0.5, 365,
         {impact("resting_hr", -6.0, -3.0, 7.0, 14.0, 10.0, 21.0), impact("steps", 0.15, 0.35, 3.0, 7.0, 7.0, 14.0),
          impact("active_energy", 0.15, 0.3, 3.0, 7.0, 7.0, 14.0),
          impact("exercise_minutes", 0.3, 0.6, 2.0, 5.0, 5.0, 10.0), impact("hrv_rmssd", 0.05, 0.15, 10.0, 20.0, 14.0, 28.0),
          impact("body_weight", -0.2, -0.08, 14.0, 28.0, 21.0, 42.0)}});
    add({"strength_training", EC::exercise_change, "began strength training",
         {"exercise_build", "weight_management", "active_lifestyle"}, {}, 0.004, 45.0, 0.5, 365,
         {impact("active_energy", 0.1, 0.2, 3.0, 7.0, 7.0, 14.0), impact("exercise_minutes", 0.2, 0.5, 2.0, 5.0, 5.0, 10.0),
          impact("body_fat_pct", -0.015, -0.005, 14.0, 28.0, 21.0, 42.0),
          impact("resting_hr", -3.0, -1.0, 7.0, 14.0, 10.0, 21.0)}});
    add({"sedentary_spell", EC::exercise_change, "sedentary stretch at work", {"sedentary", "maintenance"}, {}, 0.005,
         14.0, 0.5, 90,
         {impact("steps", -0.4, -0.2, 1.0, 3.0, 3.0, 7.0), impact("active_energy", -0.3, -0.1, 1.0, 3.0, 3.0, 7.0),
          impact("exercise_minutes", -0.6, -0.3, 1.0, 3.0, 3.0, 7.0), impact("resting_hr", 1.0, 3.0, 5.0, 10.0, 7.0, 14.0)}});
    add({"walking_habit", EC::long_term_habit, "daily walking habit", {"exercise_build", "maintenance", "bp_control"},
         {}, 0.0015, 300.0, 0.3, 900,
         {impact("steps", 0.1, 0.25, 7.0, 14.0, 14.0, 28.0), impact("hrv_rmssd", 0.03, 0.08, 14.0, 28.0, 21.0, 42.0),
          impact("systolic_bp", -5.0, -2.0, 14.0, 28.0, 21.0, 42.0), impact("resting_hr", -3.0, -1.0, 14.0, 28.0, 21.0, 42.0)}});
    add({"high_sodium_diet", EC::diet_change, "high-sodium diet", {"exacerbation", "indulgent"}, {}, 0.006, 21.0, 0.5,
         120,
         {impact("systolic_bp", 4.0, 9.0, 3.0, 7.0, 5.0, 14.0), impact("diastolic_bp", 2.0, 5.0, 3.0, 7.0, 5.0, 14.0),
          impact("body_weight", 0.02, 0.06, 3.0, 7.0, 7.0, 14.0)}});
    add({"late_night_meals", EC::diet_change, "occasional late-night meals", {"indulgent"}, {}, 0.008, 10.0, 0.6, 60,
         {impact("sleep_efficiency", -0.2, -0.05, 1.0, 3.0, 2.0, 5.0), impact("deep_sleep_ratio", -0.2, -0.05, 1.0, 3.0, 2.0, 5.0),
          impact("fasting_glucose", 0.02, 0.06, 2.0, 5.0, 3.0, 7.0)}});
    add({"social_dinners", EC::diet_change, "social dinners", {}, {}, 0.008, 3.0, 0.6, 21,
         {impact("fasting_glucose", 0.02, 0.05, 1.0, 2.0, 2.0, 4.0), impact("triglycerides", 0.05, 0.15, 1.0, 2.0, 3.0, 7.0),
          impact("sleep_duration", -0.5, -0.2, 1.0, 2.0, 1.0, 3.0)}});
    add({"low_carb_diet", EC::diet_change, "switched to low-carb diet",
         {"diet_improvement", "weight_management", "glycemic_control"}, {}, 0.005, 45.0, 0.5, 240,
         {impact("fasting_glucose", -0.12, -0.05, 5.0, 10.0, 7.0, 14.0), impact("body_weight", -0.2, -0.08, 14.0, 28.0, 21.0, 42.0),
          impact("triglycerides", -0.25, -0.1, 7.0, 14.0, 14.0, 28.0), impact("hba1c", -0.25, -0.1, 21.0, 42.0, 28.0, 56.0)}});
    add({"mediterranean_diet", EC::long_term_habit, "adopted Mediterranean eating pattern",
         {"diet_improvement", "bp_control", "maintenance"}, {}, 0.0012, 365.0, 0.3, 900,
         {impact("ldl", -0.15, -0.05, 21.0, 42.0, 28.0, 56.0), impact("systolic_bp", -4.0, -1.0, 14.0, 28.0, 21.0, 42.0),
          impact("crp", -0.3, -0.1, 21.0, 42.0, 28.0, 56.0), impact("triglycerides", -0.15, -0.05, 14.0, 28.0, 21.0, 42.0)}});
    add({"tension_headache", EC::health_event, "tension headache", {}, {}, 0.012, 2.0, 0.6, 14,
         {impact("sleep_duration", -0.8, -0.3, 1.0, 1.0, 1.0, 3.0), impact("hrv_rmssd", -0.15, -0.05, 1.0, 1.0, 1.0, 3.0),
          impact("resting_hr", 1.0, 3.0, 1.0, 1.0, 1.0, 3.0)}});
    add({"gastroenteritis", EC::health_event, "mild gastroenteritis", {"acute_recovery"}, {}, 0.006, 3.0, 0.5, 21,
         {impact("body_weight", -0.15, -0.05, 1.0, 2.0, 3.0, 7.0), impact("steps", -0.5, -0.2, 1.0, 2.0, 2.0, 5.0),
          impact("resting_hr", 2.0, 6.0, 1.0, 2.0, 2.0, 5.0), impact("crp", 0.5, 1.2, 1.0, 2.0, 3.0, 7.0)}});
    add({"respiratory_infection", EC::health_event, "acute respiratory infection", {"acute_recovery", "exacerbation"},
         {}, 0.006, 7.0, 0.4, 30,
         {impact("spo2", -0.6, -0.2, 1.0, 3.0, 3.0, 10.0), impact("respiratory_rate", 1.0, 3.0, 1.0, 3.0, 3.0, 10.0),
          impact("resting_hr", 4.0, 9.0, 1.0, 3.0, 3.0, 10.0), impact("steps", -0.6, -0.3, 1.0, 3.0, 3.0, 10.0),
          impact("crp", 0.8, 1.8, 1.0, 3.0, 5.0, 14.0), impact("sleep_duration", 0.3, 0.8, 1.0, 3.0, 2.0, 5.0)}});
    add({"situational_anxiety", EC::health_event, "situational anxiety", {"sleep_stress"}, {}, 0.008, 2.0, 0.6, 14,
         {impact("sleep_efficiency", -0.3, -0.1, 1.0, 1.0, 1.0, 3.0), impact("hrv_rmssd", -0.2, -0.08, 1.0, 1.0, 1.0, 3.0),
          impact("resting_hr", 2.0, 5.0, 1.0, 1.0, 1.0, 3.0), impact("systolic_bp", 2.0, 6.0, 1.0, 1.0, 1.0, 3.0)}});
    add({"work_stress", EC::health_event, "high-stress work period", {"sleep_stress"}, {}, 0.004, 30.0, 0.4, 120,
         {impact("sleep_duration", -0.8, -0.3, 3.0, 7.0, 5.0, 14.0), impact("hrv_rmssd", -0.2, -0.1, 3.0, 7.0, 5.0, 14.0),
          impact("resting_hr", 2.0, 4.0, 3.0, 7.0, 5.0, 14.0), impact("systolic_bp", 3.0, 7.0, 3.0, 7.0, 5.0, 14.0)}});
    add({"sleep_hygiene", EC::long_term_habit, "improved sleep hygiene routine", {"sleep_stress", "maintenance"}, {},
         0.0015, 240.0, 0.3, 900,
         {impact("sleep_duration", 0.3, 0.7, 7.0, 14.0, 14.0, 28.0), impact("sleep_efficiency", 0.1, 0.3, 7.0, 14.0, 14.0, 28.0),
          impact("deep_sleep_ratio", 0.1, 0.25, 7.0, 14.0, 14.0, 28.0)}});
    add({"medication_adjustment", EC::health_event, "medication adjustment",
         {"treatment_escalation", "glycemic_control", "bp_control"},
         {"t2dm", "hypertension", "prediabetes", "metabolic_syndrome", "cvd", "ckd"}, 0.004, 90.0, 0.3, 365,
         {impact("systolic_bp", -10.0, -4.0, 7.0, 14.0, 14.0, 28.0), impact("diastolic_bp", -6.0, -2.0, 7.0, 14.0, 14.0, 28.0),
          impact("fasting_glucose", -0.2, -0.08, 7.0, 14.0, 14.0, 28.0), impact("hba1c", -0.4, -0.15, 28.0, 56.0, 28.0, 56.0)}});
    add({"symptom_flare", EC::health_event, "symptom flare-up", {"exacerbation"}, chronic, 0.004, 10.0, 0.5, 60,
         {impact("crp", 0.5, 1.5, 1.0, 3.0, 5.0, 14.0), impact("resting_hr", 2.0, 5.0, 1.0, 3.0, 3.0, 10.0),
          impact("steps", -0.4, -0.15, 1.0, 3.0, 3.0, 10.0), impact("fasting_glucose", 0.05, 0.12, 1.0, 3.0, 3.0, 10.0),
          impact("systolic_bp", 3.0, 8.0, 1.0, 3.0, 3.0, 10.0)}});
    add({"quit_smoking", EC::long_term_habit, "quit smoking", {"treatment_escalation", "maintenance"}, {}, 0.0008,
         500.0, 0.3, 1200,
         {impact("resting_hr", -4.0, -2.0, 21.0, 42.0, 28.0, 56.0), impact("spo2", 0.1, 0.3, 21.0, 42.0, 28.0, 56.0),
          impact("hrv_rmssd", 0.05, 0.12, 21.0, 42.0, 28.0, 56.0), impact("body_weight", 0.03, 0.08, 28.0, 56.0, 28.0, 56.0)}});
    add({"alcohol_reduction", EC::long_term_habit, "reduced alcohol intake", {"diet_improvement", "maintenance"}, {},
         0.001, 300.0, 0.3, 900,
         {impact("triglycerides", -0.2, -0.08, 14.0, 28.0, 21.0, 42.0), impact("alt", -0.3, -0.1, 14.0, 28.0, 21.0, 42.0),
          impact("sleep_efficiency", 0.05, 0.15, 7.0, 14.0, 14.0, 28.0), impact("body_weight", -0.05, -0.02, 14.0, 28.0, 21.0, 42.0)}});
    add({"travel", EC::diet_change, "travel with irregular meals", {}, {}, 0.006, 7.0, 0.4, 30,
         {impact("sleep_duration", -0.6, -0.2, 1.0, 2.0, 2.0, 4.0), impact("steps", 0.05, 0.2, 1.0, 2.0, 2.0, 4.0),
          impact("fasting_glucose", 0.02, 0.05, 1.0, 2.0, 2.0, 4.0)}});
    add({"minor_injury", EC::health_event, "minor ankle injury", {}, {}, 0.003, 14.0, 0.5, 60,
         {impact("steps", -0.6, -0.3, 1.0, 2.0, 3.0, 10.0), impact("exercise_minutes", -0.8, -0.4, 1.0, 2.0, 3.0, 10.0),
          impact("active_energy", -0.3, -0.1, 1.0, 2.0, 3.0, 10.0)}});
    add({"seasonal_cold", EC::health_event, "seasonal cold", {"acute_recovery"}, {}, 0.008, 5.0, 0.4, 21,
         {impact("resting_hr", 2.0, 4.0, 1.0, 2.0, 2.0, 5.0), impact("sleep_duration", 0.2, 0.6, 1.0, 2.0, 2.0, 5.0),
          impact("respiratory_rate", 0.5, 1.5, 1.0, 2.0, 2.0, 5.0), impact("steps", -0.3, -0.1, 1.0, 2.0, 2.0, 5.0)}});
    add({"weight_loss_program", EC::long_term_habit, "joined structured weight-loss program", {"weight_management"}, {},
         0.001, 180.0, 0.3, 730,
         {impact("body_weight", -0.25, -0.1, 21.0, 42.0, 28.0, 56.0), impact("body_fat_pct", -0.02, -0.008, 21.0, 42.0, 28.0, 56.0),
          impact("steps", 0.05, 0.15, 7.0, 14.0, 14.0, 28.0), impact("fasting_glucose", -0.06, -0.02, 14.0, 28.0, 21.0, 42.0)}});
    return c;
}

std::vector<ThemeTemplate> builtin_themes() {
    return {
        {"maintenance", "steady routine maintenance", Audience::any, {}},
        {"weight_management", "gradual weight management", Audience::any, {"indulgent"}},
        {"exercise_build", "building a sustained exercise routine", Audience::any, {"sedentary"}},
        {"diet_improvement", "dietary improvement", Audience::any, {"indulgent"}},
        {"sleep_stress", "stress and sleep disruption", Audience::any, {}},
        {"acute_recovery", "acute illness and recovery", Audience::any, {}},
        {"treatment_escalation", "treatment escalation", Audience::chronic, {"indulgent"}},
        {"exacerbation", "condition exacerbation", Audience::chronic, {}},
        {"glycemic_control", "glycemic control focus", Audience::chronic, {"indulgent"}},
        {"bp_control", "blood pressure control", Audience::chronic, {"indulgent"}},
        {"active_lifestyle", "active lifestyle expansion", Audience::healthy, {"sedentary"}},
    };
}

std::vector<MixtureCell> builtin_mixture() {
    using AS = AgeStratum;
    return {
        {"young_obesity", AS::young, {"obesity"}, 0.11},
        {"young_prediabetes", AS::young, {"prediabetes"}, 0.09},
        {"young_depression_sleep", AS::young, {"depression", "insomnia"}, 0.10},
        {"young_healthy", AS::young, {}, 0.03},
        {"middle_t2dm", AS::middle, {"t2dm"}, 0.10},
        {"middle_hypertension", AS::middle, {"hypertension"}, 0.10},
        {"middle_metabolic", AS::middle, {"metabolic_syndrome"}, 0.08},
        {"middle_depression", AS::middle, {"depression"}, 0.07},
        {"middle_comorbid", AS::middle, {"hypertension", "t2dm"}, 0.09},
        {"senior_htn_cvd", AS::senior, {"cvd", "hypertension"}, 0.09},
        {"senior_t2dm_ckd", AS::senior, {"ckd", "t2dm"}, 0.07},
        {"senior_osteoarthritis", AS::senior, {"osteoarthritis"}, 0.07},
    };
}

std::map<std::string, std::vector<std::string>> builtin_medications() {
    return {{"t2dm", {"metformin"}},
            {"hypertension", {"lisinopril"}},
            {"cvd", {"atorvastatin", "aspirin"}},
            {"ckd", {"losartan"}},
            {"depression", {"sertraline"}},
            {"insomnia", {"melatonin"}},
            {"metabolic_syndrome", {"atorvastatin"}},
            {"osteoarthritis", {"acetaminophen"}},
            {"prediabetes", {}},
            {"obesity", {}}};
}

std::vector<std::string> known_conditions() {
    std::vector<std::string> out;
    for (const auto& [c, _] : builtin_medications()) out.push_back(c);
    return out;
}

Catalogs builtin_catalogs() {
    return {builtin_indicators(), builtin_events(), builtin_themes(), builtin_mixture(), builtin_medications()};
}

void check_catalogs(const Catalogs& c) {
    std::set<std::string> keys;
    for (const auto& t : c.indicators) {
        check_indicator_spec(t.spec);
        if (!keys.insert(t.spec.key).second) throw std::invalid_argument("duplicate indicator '" + t.spec.key + "'");
    }
    check_catalog(c.events);
    for (const auto& e : c.events.entries) {
        for (const auto& imp : e.impacts) {
            auto it = std::find_if(c.indicators.begin(), c.indicators.end(),
                                   [&](const auto& t) { return t.spec.key == imp.indicator_key; });
            if (it == c.indicators.end()) {
                throw std::invalid_argument("catalog entry '" + e.id + "' targets unknown indicator '" +
                                            imp.indicator_key + "'");
            }
            double cap = 2.0 * it->spec.soft_cap;
            if (std::abs(imp.beta.lo) > cap || std::abs(imp.beta.hi) > cap) {
                throw std::invalid_argument("catalog entry '" + e.id + "' beta on '" + imp.indicator_key +
                                            "' exceeds 2 M_k");
            }
        }
    }
    if (c.themes.empty()) throw std::invalid_argument("theme table is empty");
    if (c.mixture.empty()) throw std::invalid_argument("mixture table is empty");
    double total = 0.0;
    for (const auto& m : c.mixture) {
        if (!(m.weight >= 0.0)) throw std::invalid_argument("mixture cell '" + m.name + "' has negative weight");
        if (!std::is_sorted(m.conditions.begin(), m.conditions.end())) {
            throw std::invalid_argument("mixture cell '" + m.name + "' conditions must be sorted");
        }
        for (const auto& cond : m.conditions) {
            if (!c.medications.contains(cond)) {
                throw std::invalid_argument("mixture cell '" + m.name + "' uses unknown condition '" + cond + "'");
            }
        }
        total += m.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture weights must sum to 1");
}

double excursion_margin(const IndicatorSpec& spec, double z) {
    double drift = spec.soft_cap;
    if (spec.on_device) {
        const double var = spec.noise_loadings.global * spec.noise_loadings.global +
                           spec.noise_loadings.group * spec.noise_loadings.group + spec.idio_variance;
        const double stationary = std::sqrt(var / (1.0 - spec.inertia * spec.inertia));
        drift = spec.soft_cap / (1.0 - spec.inertia) + z * stationary;
    }
    // seasonal swing, linearised at the baseline
    double swing_natural = spec.annual_amplitude;
    double max_week = 0.0;
    for (double w : spec.weekday_offsets) max_week = std::max(max_week, std::abs(w));
    swing_natural += max_week;
    double slope = 1.0;
    if (spec.transform == Transform::log) slope = 1.0 / spec.baseline;
    if (spec.transform == Transform::logit) {
        double p = (spec.baseline - spec.lower) / (spec.upper - spec.lower);
        slope = 1.0 / ((spec.upper - spec.lower) * p * (1.0 - p));
    }
    return drift + swing_natural * slope;
}

std::vector<IndicatorSpec> personalize(const std::vector<IndicatorTemplate>& templates, const Profile& profile,
                                       Stream& stream) {
    std::vector<IndicatorSpec> out;
    out.reserve(templates.size());
    const double decades = std::max(0.0, (profile.age - 40) / 10.0);
    for (const auto& t : templates) {
        IndicatorSpec s = t.spec;
        double mu = s.baseline + t.age_shift_per_decade * decades + t.sex_shift * sex_shift_sign(profile.sex) / 2.0;
        for (const auto& c : profile.conditions) {
            auto it = t.condition_shift.find(c);
            if (it != t.condition_shift.end()) mu += it->second;
        }
        mu += t.person_sd * stream.truncated_normal(2.0);

        // keep a finite interior for the transform before measuring margins
        const double width = s.upper - s.lower;
        mu = std::clamp(mu, s.lower + 0.05 * width, s.upper - 0.05 * width);
        if (s.transform != Transform::logit) {
            for (int iter = 0; iter < 3; ++iter) {
                s.baseline = mu;
                const double margin = excursion_margin(s);
                const double lo = (s.transform == Transform::log ? std::log(s.lower) : s.lower) + margin;
                const double hi = (s.transform == Transform::log ? std::log(s.upper) : s.upper) - margin;
                double x = to_transform(mu, s);
                x = lo <= hi ? std::clamp(x, lo, hi) : 0.5 * (lo + hi);
                mu = from_transform(x, s);
            }
        }
        s.baseline = mu;
        check_indicator_spec(s);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace hsynth
