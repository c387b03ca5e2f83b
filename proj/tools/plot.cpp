#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hsynth {

namespace {

constexpr double kWidth = 960, kHeight = 360, kLeft = 64, kRight = 16, kTop = 28, kBottom = 40;

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* style) {
    std::ostringstream os;
    os << "<polyline fill=\"none\" " << style << " points=\"";
    for (const auto& [x, y] : pts) os << x << ',' << y << ' ';
    os << "\"/>\n";
    return os.str();
}

} // namespace

std::vector<std::optional<double>> rolling_mean(const DeviceSeries& series, Day from, Day to, int window) {
    std::vector<std::optional<double>> out;
    for (Day t = from; t <= to; ++t) {
        double sum = 0;
        int n = 0;
        for (Day u = std::max(from, t - window + 1); u <= t; ++u) {
            if (const auto& v = series.days.at(static_cast<std::size_t>(u)).value) {
                sum += *v;
                ++n;
            }
        }
        out.push_back(n ? std::optional<double>(sum / n) : std::nullopt);
    }
    return out;
}

std::vector<ShadedSpan> shaded_spans(const UserBundle& b, const std::string& indicator, Day from, Day to) {
    std::vector<ShadedSpan> out;
    for (const auto& e : b.events) {
        if (!e.impact_on(indicator)) continue;
        const Day a = std::max(from, e.start_day);
        const Day z = std::min(to, e.end_day() - 1);
        if (a <= z) out.push_back({e.event_id, a, z});
    }
    return out;
}

std::string render_trajectory_svg(const UserBundle& b, const PlotRequest& r) {
    const auto* spec = b.indicator(r.indicator);
    auto it = b.device.find(r.indicator);
    if (!spec || it == b.device.end()) throw std::invalid_argument("unknown device indicator '" + r.indicator + "'");
    if (r.from < 0 || r.to >= b.horizon() || r.from > r.to) throw std::invalid_argument("plot range outside the horizon");
    const auto& series = it->second;

    double lo = spec->baseline, hi = spec->baseline;
    for (Day t = r.from; t <= r.to; ++t) {
        if (const auto& v = series.days[static_cast<std::size_t>(t)].value) {
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
    }
    std::vector<std::pair<Day, double>> exams;
    for (const auto& x : b.exams) {
        if (x.visit_day < r.from || x.visit_day > r.to) continue;
        if (const auto* res = x.result_for(r.indicator)) {
            exams.emplace_back(x.visit_day, res->value);
            lo = std::min(lo, res->value);
            hi = std::max(hi, res->value);
        }
    }
    if (hi - lo < 1e-9) {
        lo -= 1;
        hi += 1;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double span = std::max(1, r.to - r.from);
    auto x = [&](double t) { return kLeft + (t - r.from) / span * (kWidth - kLeft - kRight); };
    auto y = [&](double v) { return kTop + (hi - v) / (hi - lo) * (kHeight - kTop - kBottom); };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kLeft << "\" y=\"18\" font-size=\"13\">" << b.profile.user_id << " " << spec->key << " ("
       << spec->unit << ")</text>\n";
    for (const auto& s : shaded_spans(b, r.indicator, r.from, r.to)) {
        os << "<rect class=\"event\" data-event=\"" << s.event_id << "\" x=\"" << x(s.from) << "\" y=\"" << kTop
           << "\" width=\"" << std::max(1.0, x(s.to) - x(s.from)) << "\" height=\"" << kHeight - kTop - kBottom
           << "\" fill=\"#9ecae1\" fill-opacity=\"0.25\"/>\n";
    }
    std::vector<std::pair<double, double>> raw, smooth;
    const auto rm = rolling_mean(series, r.from, r.to);
    for (Day t = r.from; t <= r.to; ++t) {
        if (const auto& v = series.days[static_cast<std::size_t>(t)].value) raw.emplace_back(x(t), y(*v));
        if (const auto& m = rm[static_cast<std::size_t>(t - r.from)]) smooth.emplace_back(x(t), y(*m));
    }
    os << polyline(raw, "stroke=\"#bbbbbb\" stroke-width=\"1\"");
    os << polyline(smooth, "stroke=\"#1f77b4\" stroke-width=\"2\"");
    os << "<line class=\"baseline\" x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << y(spec->baseline)
       << "\" y2=\"" << y(spec->baseline) << "\" stroke=\"#ff7f0e\" stroke-dasharray=\"2,3\"/>\n";
    for (const auto& [t, v] : exams) {
        os << "<circle class=\"exam\" cx=\"" << x(t) << "\" cy=\"" << y(v) << "\" r=\"4\" fill=\"#d62728\"/>\n";
    }
    const Calendar cal(b.plan.epoch);
    os << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 12 << "\">" << cal.date(r.from) << "</text>\n";
    os << "<text x=\"" << kWidth - kRight << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"end\">" << cal.date(r.to)
       << "</text>\n";
    os << "<text x=\"4\" y=\"" << y(hi - pad) + 4 << "\">" << hi - pad << "</text>\n";
    os << "<text x=\"4\" y=\"" << y(lo + pad) + 4 << "\">" << lo + pad << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace hsynth
