#include "hsynth/exams.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hsynth/dynamics.hpp"

namespace hsynth {

std::vector<Day> schedule_exams(int horizon, double density, Stream& stream) {
    if (!(density > 0.0)) throw std::invalid_argument("exam density must be positive");
    const double spacing = 365.0 / density;
    std::vector<Day> visits;
    for (int i = 0;; ++i) {
        const double nominal = kFirstExamDay + i * spacing;
        if (nominal > horizon - 1) break;
        Day d = static_cast<Day>(std::lround(nominal)) + stream.uniform_int(-kExamJitterDays, kExamJitterDays);
        d = std::max(d, kFirstExamDay);
        if (!visits.empty()) d = std::max(d, visits.back() + 1);
        d = std::min(d, horizon - 1);
        if (!visits.empty() && d <= visits.back()) break;
        visits.push_back(d);
    }
    return visits;
}

int window_length(const IndicatorSpec& spec) {
    return spec.speed_class == SpeedClass::fast ? kFastWindowDays : kSlowWindowDays;
}

std::optional<double> window_stat(const DeviceSeries& series, const IndicatorSpec& spec, Day day) {
    const Day first = std::max<Day>(0, day - window_length(spec) + 1);
    const Day last = std::min<Day>(day, static_cast<Day>(series.days.size()) - 1);
    double sum = 0.0;
    int n = 0;
    for (Day t = first; t <= last; ++t) {
        const auto& v = series.days[static_cast<std::size_t>(t)].value;
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n < kMinWindowPoints) return std::nullopt;
    return sum / n;
}

double latent_truth(const IndicatorSpec& spec, double event_delta, const CalendarDay& day) {
    return from_transform(baseline_level(spec, day) + event_delta, spec);
}

double exam_noise_sd(const IndicatorSpec& spec) {
    if (!spec.reference_range) throw std::invalid_argument("indicator '" + spec.key + "' has no reference range");
    return kExamNoiseFraction * (spec.reference_range->high - spec.reference_range->low);
}

double anchor_with(double anchor_value, const IndicatorSpec& spec, double xi) {
    return std::clamp(anchor_value + xi, spec.lower, spec.upper);
}

double anchor(double anchor_value, const IndicatorSpec& spec, Stream& stream) {
    const double xi = exam_noise_sd(spec) * stream.truncated_normal(kExamNoiseTruncation);
    return anchor_with(anchor_value, spec, xi);
}

ExamStatus derive_status(double value, const ReferenceRange& range) {
    return (value < range.low || value > range.high) ? ExamStatus::abnormal : ExamStatus::normal;
}

std::string exam_summary(const std::vector<ExamResult>& results) {
    std::string abnormal;
    for (const auto& r : results) {
        if (r.status != ExamStatus::abnormal) continue;
        if (!abnormal.empty()) abnormal += ", ";
        abnormal += r.indicator_key;
    }
    return abnormal.empty() ? "no abnormal findings" : "abnormal: " + abnormal;
}

} // namespace hsynth
