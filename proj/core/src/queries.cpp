#include "hsynth/queries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "hsynth/dynamics.hpp"
#include "hsynth/engine.hpp"

namespace hsynth {

namespace {

constexpr int kMonthMinPoints = 15;
constexpr int kRegimeWindow = 28;
constexpr int kRegimeMinPoints = 14;
constexpr int kPrePostWindow = 14;
constexpr int kPrePostMinPoints = 7;
constexpr int kCounterfactualLookback = 60;

const std::array<const char*, 7> kWeekdayNames{"Sunday",   "Monday", "Tuesday", "Wednesday",
                                               "Thursday", "Friday", "Saturday"};

// ---------------------------------------------------------------------------
// Bundle views
// ---------------------------------------------------------------------------

struct Stats {
    double mean = 0.0;
    double var = 0.0; // population
    int n = 0;
};

Stats stats_of(const std::vector<double>& xs) {
    Stats s;
    s.n = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / s.n;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.var = ss / s.n;
    return s;
}

class View {
public:
    explicit View(const UserBundle& b) : b_(b), cal_(b.plan.epoch), horizon_(b.plan.horizon_days) {}

    const UserBundle& bundle() const { return b_; }
    const Calendar& calendar() const { return cal_; }
    int horizon() const { return horizon_; }

    const IndicatorSpec& device_spec(const std::string& key) const {
        const auto* s = b_.indicator(key);
        if (!s || !s->on_device || !b_.device.count(key)) {
            throw std::invalid_argument("'" + key + "' is not a device indicator of this bundle");
        }
        return *s;
    }
    const IndicatorSpec& exam_spec(const std::string& key) const {
        const auto* s = b_.indicator(key);
        if (!s || !s->on_exam) throw std::invalid_argument("'" + key + "' is not an exam indicator of this bundle");
        return *s;
    }
    const Event& event(const std::string& id) const {
        const auto* e = b_.event(id);
        if (!e) throw std::invalid_argument("unknown event '" + id + "'");
        return *e;
    }
    const DeviceSeries& series(const std::string& key) const {
        device_spec(key);
        return b_.device.at(key);
    }
    std::optional<double> value(const std::string& key, Day t) const {
        const auto& s = series(key);
        if (t < 0 || t >= static_cast<Day>(s.days.size())) return std::nullopt;
        return s.days[static_cast<std::size_t>(t)].value;
    }
    const Decomposition& log(const std::string& key, Day t) const {
        const auto& d = series(key).days.at(static_cast<std::size_t>(t));
        if (!d.log) throw std::invalid_argument("missing decomposition log for '" + key + "'");
        return *d.log;
    }
    /// Numeric values over the closed window, clipped to the horizon.
    std::vector<double> window(const std::string& key, Day from, Day to) const {
        std::vector<double> out;
        const auto& s = series(key);
        const Day a = std::max<Day>(0, from);
        const Day z = std::min<Day>(to, static_cast<Day>(s.days.size()) - 1);
        for (Day t = a; t <= z; ++t) {
            if (const auto& v = s.days[static_cast<std::size_t>(t)].value) out.push_back(*v);
        }
        return out;
    }
    std::vector<std::string> device_keys() const {
        std::vector<std::string> out;
        for (const auto& s : b_.indicators) {
            if (s.on_device && b_.device.count(s.key)) out.push_back(s.key);
        }
        return out;
    }
    std::vector<std::string> exam_keys() const {
        std::vector<std::string> out;
        for (const auto& s : b_.indicators) {
            if (s.on_exam) out.push_back(s.key);
        }
        return out;
    }

private:
    const UserBundle& b_;
    Calendar cal_;
    int horizon_;
};

void check_window(const View& v, const QueryParams& p) {
    if (!p.from || !p.to) throw std::invalid_argument("query requires a from/to window");
    if (*p.from < 0 || *p.to >= v.horizon() || *p.from > *p.to) {
        throw std::invalid_argument("window outside the observation horizon");
    }
}

GroundTruth truth(AnswerType type, AnswerSource source, std::string unit = {}) {
    GroundTruth g;
    g.answer_type = type;
    g.source = source;
    g.unit = std::move(unit);
    return g;
}

void set_items(GroundTruth& g, std::vector<std::string> items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    g.items = std::move(items);
}

/// Tying set as a singular answer.
void set_choice(GroundTruth& g, std::vector<std::string> ties) {
    set_items(g, std::move(ties));
    g.any_of = g.items.size() > 1;
}

std::set<std::string> impact_keys(const Event& e) {
    std::set<std::string> k;
    for (const auto& i : e.impacts) k.insert(i.indicator_key);
    return k;
}

// Eligible month means inside [from, to].
std::map<int, double> month_means(const View& v, const std::string& key, Day from, Day to) {
    std::map<int, std::vector<double>> buckets;
    const auto& s = v.series(key);
    for (Day t = from; t <= to; ++t) {
        if (const auto& x = s.days[static_cast<std::size_t>(t)].value) {
            buckets[v.calendar().month_ordinal(t)].push_back(*x);
        }
    }
    std::map<int, double> out;
    for (const auto& [m, xs] : buckets) {
        if (static_cast<int>(xs.size()) >= kMonthMinPoints) out[m] = stats_of(xs).mean;
    }
    return out;
}

double range_distance(double v, const ReferenceRange& r) {
    const double below = r.low - v;
    const double above = v - r.high;
    return std::max({0.0, below, above}) / (r.high - r.low);
}

const ExamVisit& visit_on(const View& v, Day day) {
    for (const auto& x : v.bundle().exams) {
        if (x.visit_day == day) return x;
    }
    throw std::invalid_argument("no exam visit on day " + std::to_string(day));
}

// Per-event share of the soft-capped delta on day t (0 when u = 0).
std::map<std::string, double> shares_on(const View& v, const IndicatorSpec& spec, Day t) {
    std::map<std::string, double> out;
    if (t < 1) return out;
    const auto& log = v.log(spec.key, t);
    if (log.event_raw == 0.0) return out;
    for (const auto& e : v.bundle().events) {
        for (const auto& imp : e.impacts) {
            if (imp.indicator_key != spec.key) continue;
            const double g = eval_kernel(e, imp, t, v.bundle().seeds.kernel_mode);
            if (g == 0.0) continue;
            out[e.event_id] += imp.beta * g / log.event_raw * log.event_delta;
        }
    }
    return out;
}

void set_ranking(GroundTruth& g, const std::map<std::string, double>& contributions) {
    std::vector<std::pair<std::string, double>> ranked;
    for (const auto& [id, c] : contributions) {
        if (c != 0.0) ranked.emplace_back(id, std::abs(c));
    }
    if (ranked.empty()) throw InfeasibleQuery("no event contributes in the window");
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [id, c] : ranked) {
        g.items.push_back(id);
        g.ranking_keys.push_back(c);
    }
}

// ---------------------------------------------------------------------------
// Primary subtypes
// ---------------------------------------------------------------------------

GroundTruth lookup_value(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    if (!p.day || *p.day < 0 || *p.day >= v.horizon()) throw std::invalid_argument("day outside horizon");
    auto x = v.value(p.indicator, *p.day);
    if (!x) throw InfeasibleQuery("no numeric value on that day");
    auto g = truth(AnswerType::number, AnswerSource::device, spec.unit);
    g.numbers = {*x};
    g.evidence = {{p.indicator, *p.day, *p.day}};
    return g;
}

GroundTruth event_mapping(const View& v, const QueryParams& p) {
    const auto& e = v.event(p.event_id);
    auto g = truth(AnswerType::set, AnswerSource::event);
    const auto keys = impact_keys(e);
    set_items(g, {keys.begin(), keys.end()});
    g.evidence = {{e.event_id, e.start_day, e.end_day() - 1}};
    return g;
}

GroundTruth richest_event(const View& v, const QueryParams& p) {
    check_window(v, p);
    std::size_t best = 0;
    std::vector<std::string> ties;
    for (const auto& e : v.bundle().events) {
        if (e.start_day < *p.from || e.start_day > *p.to) continue;
        const std::size_t n = impact_keys(e).size();
        if (n > best) {
            best = n;
            ties.clear();
        }
        if (n == best) ties.push_back(e.event_id);
    }
    if (ties.empty()) throw InfeasibleQuery("no event starts in the window");
    auto g = truth(AnswerType::string, AnswerSource::event);
    set_choice(g, ties);
    return g;
}

GroundTruth best_month(const View& v, const QueryParams& p) {
    v.device_spec(p.indicator);
    check_window(v, p);
    if (p.direction != "highest" && p.direction != "lowest") throw std::invalid_argument("direction must be highest or lowest");
    const auto means = month_means(v, p.indicator, *p.from, *p.to);
    if (means.size() < 2) throw InfeasibleQuery("fewer than two eligible months");
    const bool hi = p.direction == "highest";
    double best = hi ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (const auto& [m, x] : means) best = hi ? std::max(best, x) : std::min(best, x);
    std::vector<std::string> ties;
    for (const auto& [m, x] : means) {
        if (x == best) ties.push_back(month_label(m));
    }
    auto g = truth(AnswerType::string, AnswerSource::device);
    set_choice(g, ties);
    return g;
}

GroundTruth month_change(const View& v, const QueryParams& p) {
    v.device_spec(p.indicator);
    check_window(v, p);
    const auto means = month_means(v, p.indicator, *p.from, *p.to);
    double best = -1.0;
    std::vector<std::string> ties;
    for (auto it = means.begin(); it != means.end(); ++it) {
        auto next = std::next(it);
        if (next == means.end() || next->first != it->first + 1) continue;
        const double change = std::abs(next->second - it->second);
        if (change > best) {
            best = change;
            ties.clear();
        }
        if (change == best) ties.push_back(month_label(next->first));
    }
    if (ties.empty()) throw InfeasibleQuery("no pair of consecutive eligible months");
    auto g = truth(AnswerType::string, AnswerSource::device);
    set_choice(g, ties);
    return g;
}

GroundTruth regime_change(const View& v, const QueryParams& p) {
    v.device_spec(p.indicator);
    check_window(v, p);
    if (*p.to - *p.from + 1 < 2 * kRegimeWindow) throw std::invalid_argument("window shorter than 56 days");
    std::optional<Day> best_day;
    double best_gap = -1.0, best_pooled = 0.0;
    for (Day t = *p.from + kRegimeWindow; t + kRegimeWindow - 1 <= *p.to; ++t) {
        const auto before = v.window(p.indicator, t - kRegimeWindow, t - 1);
        const auto after = v.window(p.indicator, t, t + kRegimeWindow - 1);
        if (static_cast<int>(before.size()) < kRegimeMinPoints || static_cast<int>(after.size()) < kRegimeMinPoints) {
            continue;
        }
        const Stats b = stats_of(before), a = stats_of(after);
        const double gap = std::abs(a.mean - b.mean);
        if (gap > best_gap) {
            best_gap = gap;
            best_day = t;
            best_pooled = std::sqrt((a.var + b.var) / 2.0);
        }
    }
    if (!best_day) throw InfeasibleQuery("no split point with populated windows");
    if (best_gap > 2.0 * best_pooled) {
        auto g = truth(AnswerType::date, AnswerSource::derived);
        g.dates = {v.calendar().date(*best_day)};
        g.evidence = {{p.indicator, *best_day - kRegimeWindow, *best_day + kRegimeWindow - 1}};
        return g;
    }
    auto g = truth(AnswerType::string, AnswerSource::derived);
    g.items = {"none"};
    return g;
}

GroundTruth pre_post(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    const auto& e = v.event(p.event_id);
    const Day ts = e.start_day;
    if (ts - kPrePostWindow < 0 || ts + kPrePostWindow - 1 >= v.horizon()) {
        throw InfeasibleQuery("pre/post windows leave the horizon");
    }
    const auto pre = v.window(p.indicator, ts - kPrePostWindow, ts - 1);
    const auto post = v.window(p.indicator, ts, ts + kPrePostWindow - 1);
    if (static_cast<int>(pre.size()) < kPrePostMinPoints || static_cast<int>(post.size()) < kPrePostMinPoints) {
        throw InfeasibleQuery("pre/post windows too sparse");
    }
    auto g = truth(AnswerType::number, AnswerSource::derived, spec.unit);
    g.numbers = {stats_of(post).mean - stats_of(pre).mean};
    g.evidence = {{e.event_id, ts - kPrePostWindow, ts + kPrePostWindow - 1}};
    return g;
}

GroundTruth during_ratio(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    const auto& e = v.event(p.event_id);
    const Day last = std::min(e.end_day() - 1, v.horizon() - 1);
    const auto xs = v.window(p.indicator, e.start_day, last);
    if (xs.empty()) throw InfeasibleQuery("no numeric value during the event");
    auto g = truth(AnswerType::number, AnswerSource::derived, "1");
    g.numbers = {stats_of(xs).mean / spec.baseline};
    g.evidence = {{e.event_id, e.start_day, last}};
    return g;
}

GroundTruth shared_events(const View& v, const QueryParams& p) {
    const auto& target = v.event(p.event_id);
    check_window(v, p);
    const auto mine = impact_keys(target);
    std::vector<std::string> out;
    for (const auto& e : v.bundle().events) {
        if (e.event_id == target.event_id || e.start_day < *p.from || e.start_day > *p.to) continue;
        const auto theirs = impact_keys(e);
        if (std::any_of(theirs.begin(), theirs.end(), [&](const auto& k) { return mine.count(k) > 0; })) {
            out.push_back(e.event_id);
        }
    }
    auto g = truth(AnswerType::set, AnswerSource::event);
    set_items(g, out);
    return g;
}

GroundTruth ever_abnormal(const View& v, const QueryParams& p) {
    v.exam_spec(p.indicator);
    bool seen = false, abnormal = false;
    auto g = truth(AnswerType::string, AnswerSource::exam);
    for (const auto& x : v.bundle().exams) {
        if (const auto* r = x.result_for(p.indicator)) {
            seen = true;
            if (r->status == ExamStatus::abnormal) {
                abnormal = true;
                g.evidence.push_back({p.indicator, x.visit_day, x.visit_day});
            }
        }
    }
    if (!seen) throw InfeasibleQuery("indicator never examined");
    g.items = {abnormal ? "yes" : "no"};
    return g;
}

GroundTruth deterioration(const View& v, const QueryParams& p) {
    if (!p.from || !p.to || *p.from >= *p.to) throw std::invalid_argument("requires two exam days from < to");
    const auto& first = visit_on(v, *p.from);
    const auto& last = visit_on(v, *p.to);
    double best = 0.0;
    std::vector<std::string> ties;
    for (const auto& r1 : first.results) {
        const auto* r2 = last.result_for(r1.indicator_key);
        if (!r2) continue;
        const double d = range_distance(r2->value, r2->reference_range) - range_distance(r1.value, r1.reference_range);
        if (d <= 0.0) continue;
        if (d > best) {
            best = d;
            ties.clear();
        }
        if (d == best) ties.push_back(r1.indicator_key);
    }
    if (ties.empty()) throw InfeasibleQuery("no indicator deteriorated");
    auto g = truth(AnswerType::string, AnswerSource::exam);
    set_choice(g, ties);
    g.evidence = {{"exam", *p.from, *p.to}};
    return g;
}

GroundTruth clusters(const View& v, const QueryParams& p) {
    check_window(v, p);
    std::vector<const ExamVisit*> visits;
    for (const auto& x : v.bundle().exams) {
        if (x.visit_day >= *p.from && x.visit_day <= *p.to) visits.push_back(&x);
    }
    if (visits.size() < 2) throw InfeasibleQuery("fewer than two exams in the window");
    auto abnormal = [](const ExamVisit& x) {
        std::set<std::string> s;
        for (const auto& r : x.results) {
            if (r.status == ExamStatus::abnormal) s.insert(r.indicator_key);
        }
        return s;
    };
    std::vector<std::string> pairs;
    for (std::size_t i = 0; i + 1 < visits.size(); ++i) {
        const auto a = abnormal(*visits[i]);
        const auto b = abnormal(*visits[i + 1]);
        std::vector<std::string> both;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
        for (std::size_t x = 0; x < both.size(); ++x) {
            for (std::size_t y = x + 1; y < both.size(); ++y) pairs.push_back(both[x] + "+" + both[y]);
        }
    }
    auto g = truth(AnswerType::set, AnswerSource::exam);
    set_items(g, pairs);
    return g;
}

GroundTruth above_2sigma(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    if (p.direction != "above" && p.direction != "below") throw std::invalid_argument("direction must be above or below");
    const auto& s = v.series(p.indicator);
    std::vector<double> quiet, all;
    for (Day t = 0; t < v.horizon(); ++t) {
        const auto& d = s.days[static_cast<std::size_t>(t)];
        if (!d.value) continue;
        all.push_back(*d.value);
        if (v.log(p.indicator, t).event_raw == 0.0) quiet.push_back(*d.value);
    }
    auto g = truth(AnswerType::set, AnswerSource::derived);
    Stats base = stats_of(quiet);
    if (quiet.size() < 2) {
        base = stats_of(all);
        g.flags.push_back("baseline_whole_series");
    }
    const double sd = std::sqrt(base.var);
    std::vector<std::string> ids;
    for (Day t = *p.from; t <= *p.to; ++t) {
        const auto& x = s.days[static_cast<std::size_t>(t)].value;
        if (!x) continue;
        const bool hit = p.direction == "above" ? *x > base.mean + 2.0 * sd : *x < base.mean - 2.0 * sd;
        if (!hit) continue;
        for (const auto& e : v.bundle().events) {
            const auto* imp = e.impact_on(spec.key);
            if (imp && eval_kernel(e, *imp, t, v.bundle().seeds.kernel_mode) > 0.0) ids.push_back(e.event_id);
        }
    }
    set_items(g, ids);
    return g;
}

GroundTruth impact_ranking(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    std::map<std::string, double> total;
    for (Day t = *p.from; t <= *p.to; ++t) {
        for (const auto& [id, c] : shares_on(v, spec, t)) total[id] += c;
    }
    auto g = truth(AnswerType::ranked_list, AnswerSource::derived, spec.unit);
    set_ranking(g, total);
    return g;
}

GroundTruth change_contribution(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    if (*p.from >= *p.to) throw std::invalid_argument("requires from < to");
    const auto at_end = shares_on(v, spec, *p.to);
    const auto at_start = shares_on(v, spec, *p.from);
    std::map<std::string, double> contribution;
    for (const auto& [id, c] : at_end) contribution[id] += c;
    for (const auto& [id, c] : at_start) contribution[id] -= c;
    auto g = truth(AnswerType::ranked_list, AnswerSource::derived, spec.unit);
    set_ranking(g, contribution);
    return g;
}

GroundTruth change_contribution_cf(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    if (*p.from >= *p.to) throw std::invalid_argument("requires from < to");
    const Day t1 = *p.from, t2 = *p.to;
    const double observed = v.log(spec.key, t2).value - v.log(spec.key, t1).value;
    std::map<std::string, double> contribution;
    for (const auto& e : v.bundle().events) {
        if (!e.impact_on(spec.key) || e.start_day >= t2 || e.support_end() < t1 - kCounterfactualLookback) continue;
        const auto cf = resimulate_without(v.bundle(), e.event_id);
        const auto& days = cf.at(spec.key).days;
        const double cf_change = days[static_cast<std::size_t>(t2)].log->value - days[static_cast<std::size_t>(t1)].log->value;
        contribution[e.event_id] = observed - cf_change;
    }
    auto g = truth(AnswerType::ranked_list, AnswerSource::derived, spec.unit);
    set_ranking(g, contribution);
    g.flags.push_back("counterfactual");
    return g;
}

// ---------------------------------------------------------------------------
// Device-only fallbacks
// ---------------------------------------------------------------------------

GroundTruth extreme_value(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    const auto xs = v.window(p.indicator, *p.from, *p.to);
    if (xs.empty()) throw InfeasibleQuery("no numeric value in the window");
    auto g = truth(AnswerType::number, AnswerSource::device, spec.unit);
    g.numbers = {p.direction == "lowest" ? *std::min_element(xs.begin(), xs.end())
                                         : *std::max_element(xs.begin(), xs.end())};
    return g;
}

GroundTruth extreme_date(const View& v, const QueryParams& p) {
    v.device_spec(p.indicator);
    check_window(v, p);
    const auto xs = v.window(p.indicator, *p.from, *p.to);
    if (xs.empty()) throw InfeasibleQuery("no numeric value in the window");
    const double target = p.direction == "lowest" ? *std::min_element(xs.begin(), xs.end())
                                                  : *std::max_element(xs.begin(), xs.end());
    auto g = truth(AnswerType::date, AnswerSource::device);
    for (Day t = *p.from; t <= *p.to; ++t) {
        if (auto x = v.value(p.indicator, t); x && *x == target) g.dates.push_back(v.calendar().date(t));
    }
    g.any_of = g.dates.size() > 1;
    return g;
}

GroundTruth mean_difference(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    if (*p.to - *p.from + 1 != 2 * kPrePostWindow) throw std::invalid_argument("window must span 28 days");
    const auto first = v.window(p.indicator, *p.from, *p.from + kPrePostWindow - 1);
    const auto second = v.window(p.indicator, *p.from + kPrePostWindow, *p.to);
    if (static_cast<int>(first.size()) < kPrePostMinPoints || static_cast<int>(second.size()) < kPrePostMinPoints) {
        throw InfeasibleQuery("windows too sparse");
    }
    auto g = truth(AnswerType::number, AnswerSource::derived, spec.unit);
    g.numbers = {stats_of(second).mean - stats_of(first).mean};
    return g;
}

GroundTruth baseline_ratio(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    const auto xs = v.window(p.indicator, *p.from, *p.to);
    if (xs.empty()) throw InfeasibleQuery("no numeric value in the window");
    auto g = truth(AnswerType::number, AnswerSource::derived, "1");
    g.numbers = {stats_of(xs).mean / spec.baseline};
    return g;
}

GroundTruth larger_shift(const View& v, const QueryParams& p) {
    check_window(v, p);
    if (p.indicator == p.indicator_b) throw std::invalid_argument("requires two distinct indicators");
    const Day mid = *p.from + (*p.to - *p.from + 1) / 2;
    std::vector<std::pair<double, std::string>> shifts;
    for (const auto* key : {&p.indicator, &p.indicator_b}) {
        const auto& spec = v.device_spec(*key);
        const auto a = v.window(*key, *p.from, mid - 1);
        const auto b = v.window(*key, mid, *p.to);
        if (a.size() < 3 || b.size() < 3) throw InfeasibleQuery("halves too sparse");
        shifts.emplace_back(std::abs(stats_of(b).mean - stats_of(a).mean) / std::abs(spec.baseline), *key);
    }
    auto g = truth(AnswerType::string, AnswerSource::derived);
    if (shifts[0].first == shifts[1].first) {
        set_choice(g, {shifts[0].second, shifts[1].second});
    } else {
        set_choice(g, {shifts[0].first > shifts[1].first ? shifts[0].second : shifts[1].second});
    }
    return g;
}

const ReferenceRange& device_reference(const View& v, const std::string& key) {
    const auto& spec = v.device_spec(key);
    if (!spec.reference_range) throw std::invalid_argument("'" + key + "' has no reference range");
    return *spec.reference_range;
}

GroundTruth out_of_reference(const View& v, const QueryParams& p) {
    const auto& r = device_reference(v, p.indicator);
    check_window(v, p);
    const auto xs = v.window(p.indicator, *p.from, *p.to);
    if (xs.empty()) throw InfeasibleQuery("no numeric value in the window");
    const bool any = std::any_of(xs.begin(), xs.end(), [&](double x) { return x < r.low || x > r.high; });
    auto g = truth(AnswerType::string, AnswerSource::device);
    g.items = {any ? "yes" : "no"};
    return g;
}

GroundTruth out_of_range_days(const View& v, const QueryParams& p) {
    const auto& r = device_reference(v, p.indicator);
    check_window(v, p);
    const auto xs = v.window(p.indicator, *p.from, *p.to);
    if (xs.empty()) throw InfeasibleQuery("no numeric value in the window");
    auto g = truth(AnswerType::number, AnswerSource::device, "d");
    g.numbers = {static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x < r.low || x > r.high; }))};
    return g;
}

GroundTruth longest_run(const View& v, const QueryParams& p) {
    const auto& r = device_reference(v, p.indicator);
    check_window(v, p);
    if (v.window(p.indicator, *p.from, *p.to).empty()) throw InfeasibleQuery("no numeric value in the window");
    int best = 0, run = 0;
    for (Day t = *p.from; t <= *p.to; ++t) {
        const auto x = v.value(p.indicator, t);
        run = (x && (*x < r.low || *x > r.high)) ? run + 1 : 0;
        best = std::max(best, run);
    }
    auto g = truth(AnswerType::number, AnswerSource::device, "d");
    g.numbers = {static_cast<double>(best)};
    return g;
}

GroundTruth sigma_days(const View& v, const QueryParams& p) {
    v.device_spec(p.indicator);
    check_window(v, p);
    const Stats all = stats_of(v.window(p.indicator, 0, v.horizon() - 1));
    if (all.n == 0) throw InfeasibleQuery("no numeric values");
    const double threshold = all.mean + 2.0 * std::sqrt(all.var);
    const auto xs = v.window(p.indicator, *p.from, *p.to);
    auto g = truth(AnswerType::number, AnswerSource::derived, "d");
    g.numbers = {static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x > threshold; }))};
    return g;
}

GroundTruth weekday_peak(const View& v, const QueryParams& p) {
    v.device_spec(p.indicator);
    check_window(v, p);
    std::array<std::vector<double>, 7> by_day;
    for (Day t = *p.from; t <= *p.to; ++t) {
        if (auto x = v.value(p.indicator, t)) by_day[static_cast<std::size_t>(v.calendar().weekday(t))].push_back(*x);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& xs : by_day) {
        if (xs.empty()) throw InfeasibleQuery("a weekday has no numeric value");
        best = std::max(best, stats_of(xs).mean);
    }
    std::vector<std::string> ties;
    for (std::size_t d = 0; d < 7; ++d) {
        if (stats_of(by_day[d]).mean == best) ties.push_back(kWeekdayNames[d]);
    }
    auto g = truth(AnswerType::string, AnswerSource::derived);
    set_choice(g, ties);
    return g;
}

GroundTruth deviation_day(const View& v, const QueryParams& p) {
    const auto& spec = v.device_spec(p.indicator);
    check_window(v, p);
    double best = -1.0;
    std::vector<Day> days;
    for (Day t = *p.from; t <= *p.to; ++t) {
        auto x = v.value(p.indicator, t);
        if (!x) continue;
        const double dev = std::abs(*x - spec.baseline);
        if (dev > best) {
            best = dev;
            days.clear();
        }
        if (dev == best) days.push_back(t);
    }
    if (days.empty()) throw InfeasibleQuery("no numeric value in the window");
    auto g = truth(AnswerType::date, AnswerSource::derived);
    for (Day t : days) g.dates.push_back(v.calendar().date(t));
    g.any_of = g.dates.size() > 1;
    return g;
}

using TruthFn = GroundTruth (*)(const View&, const QueryParams&);

struct SubtypeImpl {
    SubtypeInfo info;
    TruthFn fn;
};

const std::vector<SubtypeImpl>& implementations() {
    using D = Dimension;
    using T = Tier;
    static const std::vector<SubtypeImpl> table{
        {{"device_value_on_date", D::Lookup, T::Easy}, lookup_value},
        {{"event_indicator_mapping", D::Lookup, T::Medium}, event_mapping},
        {{"most_indicator_rich_event", D::Lookup, T::Hard}, richest_event},
        {{"best_worst_month", D::Trend, T::Easy}, best_month},
        {{"largest_month_change", D::Trend, T::Medium}, month_change},
        {{"regime_change", D::Trend, T::Hard}, regime_change},
        {{"pre_post_event", D::Comparison, T::Easy}, pre_post},
        {{"during_event_ratio", D::Comparison, T::Medium}, during_ratio},
        {{"shared_indicator_events", D::Comparison, T::Hard}, shared_events},
        {{"ever_abnormal", D::Anomaly, T::Easy}, ever_abnormal},
        {{"abnormal_deterioration", D::Anomaly, T::Medium}, deterioration},
        {{"abnormal_clusters", D::Anomaly, T::Hard}, clusters},
        {{"events_above_2sigma", D::Explanation, T::Easy}, above_2sigma},
        {{"event_impact_ranking", D::Explanation, T::Medium}, impact_ranking},
        {{"change_contribution", D::Explanation, T::Hard}, change_contribution},
        {{"change_contribution_counterfactual", D::Explanation, T::Hard}, change_contribution_cf},
        {{"window_extreme_value", D::Lookup, T::Medium, true}, extreme_value},
        {{"window_extreme_date", D::Lookup, T::Hard, true}, extreme_date},
        {{"window_mean_difference", D::Comparison, T::Easy, true}, mean_difference},
        {{"window_baseline_ratio", D::Comparison, T::Medium, true}, baseline_ratio},
        {{"indicator_pair_larger_shift", D::Comparison, T::Hard, true}, larger_shift},
        {{"device_out_of_reference", D::Anomaly, T::Easy, true}, out_of_reference},
        {{"device_out_of_range_days", D::Anomaly, T::Medium, true}, out_of_range_days},
        {{"longest_out_of_range_run", D::Anomaly, T::Hard, true}, longest_run},
        {{"days_above_2sigma_count", D::Explanation, T::Easy, true}, sigma_days},
        {{"weekday_peak", D::Explanation, T::Medium, true}, weekday_peak},
        {{"largest_deviation_day", D::Explanation, T::Hard, true}, deviation_day},
    };
    return table;
}

const SubtypeImpl& impl_of(const std::string& name) {
    for (const auto& s : implementations()) {
        if (s.info.name == name) return s;
    }
    throw std::invalid_argument("unknown query subtype '" + name + "'");
}

// ---------------------------------------------------------------------------
// Parameter sampling
// ---------------------------------------------------------------------------

template <class T> const T& pick(const std::vector<T>& xs, Stream& s) {
    if (xs.empty()) throw InfeasibleQuery("nothing to sample from");
    return xs[static_cast<std::size_t>(s.uniform_int(0, static_cast<int>(xs.size()) - 1))];
}

void sample_window(QueryParams& p, int horizon, int len_lo, int len_hi, Stream& s) {
    const int hi = std::min(len_hi, horizon);
    const int lo = std::min(len_lo, hi);
    const int len = s.uniform_int(lo, hi);
    const Day from = s.uniform_int(0, horizon - len);
    p.from = from;
    p.to = from + len - 1;
}

std::vector<std::string> device_impacted(const View& v, const Event& e) {
    std::vector<std::string> out;
    for (const auto& i : e.impacts) {
        const auto* s = v.bundle().indicator(i.indicator_key);
        if (s && s->on_device && v.bundle().device.count(s->key)) out.push_back(s->key);
    }
    return out;
}

std::vector<std::string> impacted_device_keys(const View& v) {
    std::set<std::string> keys;
    for (const auto& e : v.bundle().events) {
        for (const auto& k : device_impacted(v, e)) keys.insert(k);
    }
    return {keys.begin(), keys.end()};
}

std::vector<std::string> reference_device_keys(const View& v) {
    std::vector<std::string> out;
    for (const auto& s : v.bundle().indicators) {
        if (s.on_device && s.reference_range && v.bundle().device.count(s.key)) out.push_back(s.key);
    }
    return out;
}

std::vector<const Event*> all_events(const View& v) {
    std::vector<const Event*> out;
    for (const auto& e : v.bundle().events) out.push_back(&e);
    return out;
}

} // namespace

const std::vector<SubtypeInfo>& subtype_inventory() {
    static const std::vector<SubtypeInfo> out = [] {
        std::vector<SubtypeInfo> v;
        for (const auto& s : implementations()) v.push_back(s.info);
        return v;
    }();
    return out;
}

const SubtypeInfo& subtype_info(const std::string& name) { return impl_of(name).info; }

GroundTruth compute_ground_truth(const UserBundle& bundle, const std::string& subtype, const QueryParams& params) {
    const View v(bundle);
    return impl_of(subtype).fn(v, params);
}

QueryParams sample_params(const UserBundle& bundle, const std::string& subtype, Stream& s) {
    const View v(bundle);
    const int h = v.horizon();
    QueryParams p;
    const auto events = all_events(v);
    auto direction = [&](const char* a, const char* b) { return std::string(s.bernoulli(0.5) ? a : b); };

    if (subtype == "device_value_on_date") {
        p.indicator = pick(v.device_keys(), s);
        std::vector<Day> days;
        for (Day t = 0; t < h; ++t) {
            if (v.value(p.indicator, t)) days.push_back(t);
        }
        p.day = pick(days, s);
    } else if (subtype == "event_indicator_mapping") {
        p.event_id = pick(events, s)->event_id;
    } else if (subtype == "most_indicator_rich_event") {
        if (events.size() < 2) throw InfeasibleQuery("fewer than two events");
        sample_window(p, h, 90, 365, s);
    } else if (subtype == "best_worst_month") {
        p.indicator = pick(v.device_keys(), s);
        sample_window(p, h, 150, 365, s);
        p.direction = direction("highest", "lowest");
    } else if (subtype == "largest_month_change" || subtype == "regime_change") {
        p.indicator = pick(v.device_keys(), s);
        sample_window(p, h, 120, 365, s);
    } else if (subtype == "pre_post_event" || subtype == "during_event_ratio") {
        std::vector<const Event*> usable;
        for (const auto* e : events) {
            if (!device_impacted(v, *e).empty()) usable.push_back(e);
        }
        const Event* e = pick(usable, s);
        p.event_id = e->event_id;
        p.indicator = pick(device_impacted(v, *e), s);
    } else if (subtype == "shared_indicator_events") {
        if (events.size() < 2) throw InfeasibleQuery("fewer than two events");
        const Event* e = pick(events, s);
        p.event_id = e->event_id;
        const int w = s.uniform_int(30, 120);
        p.from = std::max(0, e->start_day - w);
        p.to = std::min(h - 1, e->start_day + w);
    } else if (subtype == "ever_abnormal") {
        if (bundle.exams.empty()) throw InfeasibleQuery("no exams");
        p.indicator = pick(v.exam_keys(), s);
    } else if (subtype == "abnormal_deterioration") {
        if (bundle.exams.size() < 2) throw InfeasibleQuery("fewer than two exams");
        const int n = static_cast<int>(bundle.exams.size());
        const int a = s.uniform_int(0, n - 2);
        const int b = s.uniform_int(a + 1, n - 1);
        p.from = bundle.exams[static_cast<std::size_t>(a)].visit_day;
        p.to = bundle.exams[static_cast<std::size_t>(b)].visit_day;
    } else if (subtype == "abnormal_clusters") {
        if (bundle.exams.size() < 2) throw InfeasibleQuery("fewer than two exams");
        const int n = static_cast<int>(bundle.exams.size());
        const int a = s.uniform_int(0, n - 2);
        const int b = s.uniform_int(a + 1, n - 1);
        p.from = bundle.exams[static_cast<std::size_t>(a)].visit_day;
        p.to = bundle.exams[static_cast<std::size_t>(b)].visit_day;
    } else if (subtype == "events_above_2sigma") {
        p.indicator = pick(impacted_device_keys(v), s);
        sample_window(p, h, 120, 365, s);
        p.direction = direction("above", "below");
    } else if (subtype == "event_impact_ranking") {
        p.indicator = pick(impacted_device_keys(v), s);
        sample_window(p, h, 60, 180, s);
    } else if (subtype == "change_contribution" || subtype == "change_contribution_counterfactual") {
        p.indicator = pick(impacted_device_keys(v), s);
        // anchor the end of the change inside some event's active span
        std::vector<const Event*> usable;
        for (const auto* e : events) {
            if (e->impact_on(p.indicator) && e->start_day + 1 < h) usable.push_back(e);
        }
        const Event* e = pick(usable, s);
        const Day end_hi = std::min<Day>(h - 1, static_cast<Day>(std::ceil(e->support_end())));
        const Day to = s.uniform_int(e->start_day + 1, std::max(e->start_day + 1, end_hi));
        const Day from = std::max(0, to - s.uniform_int(14, 90));
        if (from >= to) throw InfeasibleQuery("degenerate change window");
        p.from = from;
        p.to = to;
    } else if (subtype == "window_extreme_value" || subtype == "window_extreme_date") {
        p.indicator = pick(v.device_keys(), s);
        sample_window(p, h, 30, 120, s);
        p.direction = direction("highest", "lowest");
    } else if (subtype == "window_mean_difference") {
        p.indicator = pick(v.device_keys(), s);
        sample_window(p, h, 2 * kPrePostWindow, 2 * kPrePostWindow, s);
    } else if (subtype == "window_baseline_ratio" || subtype == "days_above_2sigma_count" ||
               subtype == "largest_deviation_day") {
        p.indicator = pick(v.device_keys(), s);
        sample_window(p, h, 30, 180, s);
    } else if (subtype == "indicator_pair_larger_shift") {
        auto keys = v.device_keys();
        p.indicator = pick(keys, s);
        keys.erase(std::find(keys.begin(), keys.end(), p.indicator));
        p.indicator_b = pick(keys, s);
        sample_window(p, h, 60, 180, s);
    } else if (subtype == "device_out_of_reference" || subtype == "device_out_of_range_days" ||
               subtype == "longest_out_of_range_run") {
        p.indicator = pick(reference_device_keys(v), s);
        sample_window(p, h, 30, 180, s);
    } else if (subtype == "weekday_peak") {
        p.indicator = pick(v.device_keys(), s);
        sample_window(p, h, 56, 180, s);
    } else {
        throw std::invalid_argument("unknown query subtype '" + subtype + "'");
    }
    return p;
}

std::string render_query_text(const UserBundle& bundle, const std::string& subtype, const QueryParams& p) {
    const Calendar cal(bundle.plan.epoch);
    auto label = [](std::string key) {
        std::replace(key.begin(), key.end(), '_', ' ');
        return key;
    };
    auto date = [&](const std::optional<Day>& d) { return d ? cal.date(*d) : std::string("?"); };
    auto event = [&](const std::string& id) {
        const auto* e = bundle.event(id);
        return e ? "the event " + id + " (" + e->name + ", starting " + cal.date(e->start_day) + ")" : id;
    };
    const std::string window = "between " + date(p.from) + " and " + date(p.to);
    const std::string ind = label(p.indicator);
    std::ostringstream q;
    if (subtype == "device_value_on_date") {
        q << "What was this user's " << ind << " on " << date(p.day) << "?";
    } else if (subtype == "event_indicator_mapping") {
        q << "Which indicators were affected by " << event(p.event_id) << "?";
    } else if (subtype == "most_indicator_rich_event") {
        q << "Among events starting " << window << ", which event affected the most indicators? Name one such event.";
    } else if (subtype == "best_worst_month") {
        q << "Which calendar month " << window << " had the " << p.direction << " average " << ind
          << "? Answer as YYYY-MM.";
    } else if (subtype == "largest_month_change") {
        q << "Between consecutive calendar months " << window << ", in which month did the average " << ind
          << " change the most from the previous month? Answer as YYYY-MM.";
    } else if (subtype == "regime_change") {
        q << "Did " << ind << " shift to a new level " << window
          << " (28-day means differing by more than two pooled standard deviations)? Give the first day of the new "
             "level, or answer none.";
    } else if (subtype == "pre_post_event") {
        q << "How did the mean " << ind << " in the 14 days starting with " << event(p.event_id)
          << " compare with the 14 days before? Report after minus before.";
    } else if (subtype == "during_event_ratio") {
        q << "While " << event(p.event_id) << " was ongoing, what was the ratio of mean " << ind
          << " to the user's personal baseline?";
    } else if (subtype == "shared_indicator_events") {
        q << "Which other events starting " << window << " share at least one affected indicator with "
          << event(p.event_id) << "?";
    } else if (subtype == "ever_abnormal") {
        q << "Has " << ind << " ever been marked abnormal at an exam? Answer yes or no.";
    } else if (subtype == "abnormal_deterioration") {
        q << "Between the exams on " << date(p.from) << " and " << date(p.to)
          << ", which indicator deteriorated the most relative to its reference range?";
    } else if (subtype == "abnormal_clusters") {
        q << "Which pairs of exam indicators were abnormal together in two consecutive exams " << window
          << "? List each pair as a+b.";
    } else if (subtype == "events_above_2sigma") {
        q << "On days " << window << " when " << ind << " was more than two standard deviations " << p.direction
          << " its event-free baseline, which events were active?";
    } else if (subtype == "event_impact_ranking") {
        q << "Rank the events by their contribution to " << ind << " " << window << ", largest first.";
    } else if (subtype == "change_contribution") {
        q << "The user's " << ind << " changed from " << date(p.from) << " to " << date(p.to)
          << ". Rank the events by their estimated contribution to that change, largest first.";
    } else if (subtype == "change_contribution_counterfactual") {
        q << "Had each event not happened, how much would the change in " << ind << " from " << date(p.from)
          << " to " << date(p.to) << " differ? Rank events by that counterfactual contribution, largest first.";
    } else if (subtype == "window_extreme_value") {
        q << "What was the " << p.direction << " " << ind << " recorded " << window << "?";
    } else if (subtype == "window_extreme_date") {
        q << "On which date " << window << " was " << ind << " at its " << p.direction << "?";
    } else if (subtype == "window_mean_difference") {
        q << "How did mean " << ind << " in the second half of the 28 days " << window
          << " compare with the first half? Report second minus first.";
    } else if (subtype == "window_baseline_ratio") {
        q << "What was the ratio of mean " << ind << " " << window << " to the user's personal baseline?";
    } else if (subtype == "indicator_pair_larger_shift") {
        q << "Between the first and second half of the period " << window << ", which shifted more relative to "
          << "its baseline: " << ind << " or " << label(p.indicator_b) << "?";
    } else if (subtype == "device_out_of_reference") {
        q << "Did the device-measured " << ind << " ever fall outside its clinical reference range " << window
          << "? Answer yes or no.";
    } else if (subtype == "device_out_of_range_days") {
        q << "On how many days " << window << " was the device-measured " << ind
          << " outside its clinical reference range?";
    } else if (subtype == "longest_out_of_range_run") {
        q << "What was the longest run of consecutive days " << window << " with " << ind
          << " outside its clinical reference range?";
    } else if (subtype == "days_above_2sigma_count") {
        q << "On how many days " << window << " did " << ind
          << " exceed its overall mean by more than two standard deviations?";
    } else if (subtype == "weekday_peak") {
        q << "Which day of the week had the highest average " << ind << " " << window << "?";
    } else if (subtype == "largest_deviation_day") {
        q << "On which date " << window << " did " << ind << " deviate most from the user's personal baseline?";
    } else {
        throw std::invalid_argument("unknown query subtype '" + subtype + "'");
    }
    return q.str();
}

QuerySplit parse_split(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, '/')) {
        try {
            std::size_t used = 0;
            const double x = std::stod(item, &used);
            if (used != item.size() || !(x >= 0.0)) throw std::invalid_argument(item);
            parts.push_back(x);
        } catch (const std::exception&) {
            throw std::invalid_argument("invalid split '" + text + "': expected easy/medium/hard");
        }
    }
    if (parts.size() != 3 || !(parts[0] + parts[1] + parts[2] > 0.0)) {
        throw std::invalid_argument("invalid split '" + text + "': expected three non-negative parts");
    }
    const double total = parts[0] + parts[1] + parts[2];
    return {parts[0] / total, parts[1] / total, parts[2] / total};
}

std::array<int, 3> tier_counts(int per_dimension, const QuerySplit& split) {
    const auto c = apportion(per_dimension, {split.easy, split.medium, split.hard});
    return {c[0], c[1], c[2]};
}

QuerySet generate_queries(const UserBundle& bundle, const QueryOptions& options) {
    if (options.per_dimension < 0) throw std::invalid_argument("per_dimension must be >= 0");
    QuerySet out;
    const auto counts = tier_counts(options.per_dimension, options.split);
    const std::uint64_t seed = mix64(options.seed) ^ bundle.seeds.user_seed;
    std::set<std::string> seen;
    int n = 0;

    // A binding whose text was already asked is kept only as a last resort.
    auto attempt = [&](const std::string& subtype, Stream& s, std::string& why,
                       std::optional<Query>& repeat) -> std::optional<Query> {
        for (int a = 0; a < options.max_attempts; ++a) {
            try {
                Query q;
                q.subtype = subtype;
                q.params = sample_params(bundle, subtype, s);
                q.ground_truth = compute_ground_truth(bundle, subtype, q.params);
                q.text = render_query_text(bundle, subtype, q.params);
                if (seen.count(q.text)) {
                    why = "every binding repeats an earlier question";
                    if (!repeat) repeat = std::move(q);
                    continue;
                }
                return q;
            } catch (const InfeasibleQuery& e) {
                why = e.what();
            }
        }
        return std::nullopt;
    };

    for (Dimension d : kAllDimensions) {
        for (std::size_t ti = 0; ti < kAllTiers.size(); ++ti) {
            const Tier tier = kAllTiers[ti];
            std::vector<std::string> primaries, fallbacks, other;
            for (const auto& s : subtype_inventory()) {
                if (s.tier != tier) continue;
                if (s.dimension == d && !s.fallback) primaries.push_back(s.name);
                else if (s.dimension == d) fallbacks.push_back(s.name);
                else if (s.fallback) other.push_back(s.name);
            }
            for (int k = 0; k < counts[ti]; ++k) {
                ++n;
                char id[64];
                std::snprintf(id, sizeof id, "%s-q%03d", bundle.profile.user_id.c_str(), n);
                Stream s = make_stream(seed, "query", n);
                const std::string& requested = primaries[static_cast<std::size_t>(k) % primaries.size()];
                std::string why = "no feasible binding";
                std::optional<Query> repeat;
                std::optional<Query> q = attempt(requested, s, why, repeat);
                std::string used = requested;
                for (const auto* chain : {&fallbacks, &other}) {
                    for (const auto& alt : *chain) {
                        if (q) break;
                        q = attempt(alt, s, why, repeat);
                        used = alt;
                    }
                }
                if (!q && repeat) {
                    q = std::move(repeat);
                    used = q->subtype;
                }
                if (!q) throw InfeasibleQuery("no feasible subtype for " + std::string(to_string(d)) + "/" +
                                              std::string(to_string(tier)) + ": " + why);
                if (used != requested) out.substitutions.push_back({id, requested, used, why});
                seen.insert(q->text);
                q->query_id = id;
                q->dimension = d;
                q->tier = tier;
                out.queries.push_back(std::move(*q));
            }
        }
    }
    return out;
}

bool equivalent_truth(const GroundTruth& a, const GroundTruth& b, double tol) {
    if (a.answer_type != b.answer_type || a.any_of != b.any_of || a.dates != b.dates) return false;
    if (a.items != b.items) return false; // both sides keep sets sorted
    auto close = [&](const std::vector<double>& x, const std::vector<double>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (std::abs(x[i] - y[i]) > tol * std::max(1.0, std::abs(y[i]))) return false;
        }
        return true;
    };
    return close(a.numbers, b.numbers) && close(a.ranking_keys, b.ranking_keys);
}

} // namespace hsynth
