#pragma once

#include <optional>
#include <vector>

#include "hsynth/model.hpp"
#include "hsynth/random.hpp"

namespace hsynth {

inline constexpr int kFastWindowDays = 7;
inline constexpr int kSlowWindowDays = 28;
inline constexpr int kMinWindowPoints = 3;
inline constexpr Day kFirstExamDay = 30;
inline constexpr int kExamJitterDays = 20;
/// Perturbation sd as a fraction of the reference-range width.
inline constexpr double kExamNoiseFraction = 0.02;
/// Perturbation is a normal truncated at this many sd.
inline constexpr double kExamNoiseTruncation = 3.0;

/// Visit days at nominal spacing 365 / density starting at day 30, each
/// jittered by up to 20 days, strictly increasing and inside the horizon.
/// Throws std::invalid_argument unless density > 0.
std::vector<Day> schedule_exams(int horizon, double density, Stream& stream);

[[nodiscard]] int window_length(const IndicatorSpec& spec);

/// Mean of the numeric values over the trailing window ending at @p day
/// (inclusive); nullopt when the window has fewer than 3 numeric points.
std::optional<double> window_stat(const DeviceSeries& series, const IndicatorSpec& spec, Day day);

/// from_transform(mu'_k + s'_k(day) + event_delta).
double latent_truth(const IndicatorSpec& spec, double event_delta, const CalendarDay& day);

/// Standard deviation of the anchoring perturbation for @p spec.
double exam_noise_sd(const IndicatorSpec& spec);

/// Projects anchor + xi into [L_k, U_k] for an explicit perturbation xi.
double anchor_with(double anchor_value, const IndicatorSpec& spec, double xi);

/// anchor_with() with xi drawn from @p stream (keyed by user, day, indicator).
double anchor(double anchor_value, const IndicatorSpec& spec, Stream& stream);

/// Abnormal iff value < lo or value > hi (bounds are inclusive-normal).
ExamStatus derive_status(double value, const ReferenceRange& range);

/// "no abnormal findings" or "abnormal: key1, key2".
std::string exam_summary(const std::vector<ExamResult>& results);

} // namespace hsynth
