#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsynth/model.hpp"

namespace hsynth {

struct PlotRequest {
    std::string indicator;
    Day from = 0;
    Day to = 0; ///< inclusive
};

/// Trailing 7-day mean over the numeric values of [from, to]; one entry per
/// day of the range, empty where the trailing window has no value.
std::vector<std::optional<double>> rolling_mean(const DeviceSeries& series, Day from, Day to, int window = 7);

struct ShadedSpan {
    std::string event_id;
    Day from = 0;
    Day to = 0; ///< inclusive, clipped to the plotted range
};

/// Active spans [start_day, end_day - 1] of events that touch @p indicator,
/// clipped to [from, to]; events entirely outside are dropped.
std::vector<ShadedSpan> shaded_spans(const UserBundle& bundle, const std::string& indicator, Day from, Day to);

/// SVG with the daily series, 7-day rolling mean, personal baseline line,
/// event shading and exam markers. Throws std::invalid_argument for an
/// unknown indicator or an empty/out-of-horizon range.
std::string render_trajectory_svg(const UserBundle& bundle, const PlotRequest& request);

} // namespace hsynth
