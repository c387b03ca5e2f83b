// Brute-force ground-truth recomputation. Deliberately shares no helpers with
// queries.cpp: dates, kernels, statistics and the counterfactual replay are
// re-derived here from the raw bundle fields.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "hsynth/queries.hpp"

namespace hsynth {

namespace {

namespace chr = std::chrono;

struct Oracle {
    const UserBundle& b;
    chr::sys_days epoch;

    explicit Oracle(const UserBundle& bundle) : b(bundle) {
        int y = 0;
        unsigned m = 0, d = 0;
        if (std::sscanf(bundle.plan.epoch.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
            throw std::invalid_argument("bad epoch");
        }
        epoch = chr::sys_days(chr::year{y} / chr::month{m} / chr::day{d});
    }

    int h() const { return b.plan.horizon_days; }

    chr::year_month_day ymd(int t) const { return chr::year_month_day(epoch + chr::days{t}); }

    std::string iso(int t) const {
        const auto d = ymd(t);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                      static_cast<unsigned>(d.day()));
        return buf;
    }
    std::string ym(int t) const { return iso(t).substr(0, 7); }
    int weekday(int t) const { return static_cast<int>(chr::weekday(epoch + chr::days{t}).c_encoding()); }

    const IndicatorSpec& spec(const std::string& key) const {
        for (const auto& s : b.indicators) {
            if (s.key == key) return s;
        }
        throw std::invalid_argument("unknown indicator " + key);
    }
    const Event& event(const std::string& id) const {
        for (const auto& e : b.events) {
            if (e.event_id == id) return e;
        }
        throw std::invalid_argument("unknown event " + id);
    }
    const DeviceSeries& series(const std::string& key) const {
        auto it = b.device.find(key);
        if (it == b.device.end()) throw std::invalid_argument("no device series " + key);
        return it->second;
    }
    bool has(const std::string& key, int t) const {
        return t >= 0 && t < h() && series(key).days[static_cast<std::size_t>(t)].value.has_value();
    }
    double val(const std::string& key, int t) const { return *series(key).days[static_cast<std::size_t>(t)].value; }

    // plain-loop statistics
    static double mean(const std::vector<double>& x) {
        double s = 0;
        for (double v : x) s += v;
        return s / static_cast<double>(x.size());
    }
    static double pvar(const std::vector<double>& x) {
        const double m = mean(x);
        double s = 0;
        for (double v : x) s += (v - m) * (v - m);
        return s / static_cast<double>(x.size());
    }
    std::vector<double> values(const std::string& key, int a, int z) const {
        std::vector<double> out;
        for (int t = a; t <= z; ++t) {
            if (has(key, t)) out.push_back(val(key, t));
        }
        return out;
    }

    static double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

    double kernel(const Event& e, const EventImpact& imp, int t) const {
        const double ts = e.start_day, te = e.start_day + e.duration;
        if (t <= ts || t > te + imp.tau_fade) return 0.0;
        const double k = 6.0 / imp.tau_rise;
        if (t <= te) return sig(k * (t - ts - imp.tau_rise / 2.0));
        const double start = b.seeds.kernel_mode == KernelMode::continuous ? sig(k * (te - ts - imp.tau_rise / 2.0)) : 1.0;
        return start * std::exp(-3.0 / imp.tau_fade * (t - te));
    }

    double raw_drive(const std::string& key, int t, const std::string& skip = {}) const {
        double u = 0;
        for (const auto& e : b.events) {
            if (e.event_id == skip) continue;
            for (const auto& imp : e.impacts) {
                if (imp.indicator_key == key) u += imp.beta * kernel(e, imp, t);
            }
        }
        return u;
    }

    // shares of the capped delta on day t, u recomputed from events
    std::map<std::string, double> shares(const std::string& key, int t) const {
        std::map<std::string, double> out;
        if (t < 1) return out;
        const double u = raw_drive(key, t);
        if (u == 0.0) return out;
        const double m = spec(key).soft_cap;
        const double delta = m * std::tanh(u / m);
        for (const auto& e : b.events) {
            for (const auto& imp : e.impacts) {
                if (imp.indicator_key != key) continue;
                const double g = kernel(e, imp, t);
                if (g != 0.0) out[e.event_id] += imp.beta * g / u * delta;
            }
        }
        return out;
    }

    static GroundTruth gt(AnswerType t, AnswerSource s, std::string unit = {}) {
        GroundTruth g;
        g.answer_type = t;
        g.source = s;
        g.unit = std::move(unit);
        return g;
    }
    static void choose(GroundTruth& g, std::set<std::string> s) {
        g.items.assign(s.begin(), s.end());
        g.any_of = g.items.size() > 1;
    }
    static void ranked(GroundTruth& g, const std::map<std::string, double>& c) {
        std::vector<std::pair<double, std::string>> v;
        for (const auto& [id, x] : c) {
            if (x != 0.0) v.push_back({-std::abs(x), id});
        }
        if (v.empty()) throw InfeasibleQuery("nothing to rank");
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b2) {
            return a.first != b2.first ? a.first < b2.first : a.second < b2.second;
        });
        for (const auto& [k, id] : v) {
            g.items.push_back(id);
            g.ranking_keys.push_back(-k);
        }
    }
    std::set<std::string> keys_of(const Event& e) const {
        std::set<std::string> s;
        for (const auto& i : e.impacts) s.insert(i.indicator_key);
        return s;
    }

    std::map<std::string, std::vector<double>> months(const std::string& key, int a, int z) const {
        std::map<std::string, std::vector<double>> m;
        for (int t = a; t <= z; ++t) {
            if (has(key, t)) m[ym(t)].push_back(val(key, t));
        }
        std::map<std::string, std::vector<double>> out;
        for (auto& [k, v] : m) {
            if (v.size() >= 15) out[k] = v;
        }
        return out;
    }

    static std::string next_month(const std::string& label) {
        int y = std::stoi(label.substr(0, 4)), m = std::stoi(label.substr(5, 2));
        if (++m > 12) {
            m = 1;
            ++y;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02d", y, m);
        return buf;
    }

    static double dist(double v, const ReferenceRange& r) {
        double d = 0;
        if (v < r.low) d = r.low - v;
        if (v > r.high) d = v - r.high;
        return d / (r.high - r.low);
    }

    // single-indicator counterfactual replay from logged baseline and noise
    std::vector<double> replay_without(const std::string& key, const std::string& skip) const {
        const auto& s = spec(key);
        const auto& days = series(key).days;
        auto fwd = [&](double v) {
            switch (s.transform) {
            case Transform::identity: return v;
            case Transform::log: return std::log(std::max(v, std::max(s.lower, 1e-12 * std::max(1.0, s.upper)) > 0.0
                                                                  ? std::max(s.lower, 1e-12 * std::max(1.0, s.upper))
                                                                  : 1e-12));
            case Transform::logit: {
                double p = std::min(std::max((v - s.lower) / (s.upper - s.lower), 1e-12), 1.0 - 1e-12);
                return std::log(p / (1.0 - p));
            }
            }
            return v;
        };
        auto inv = [&](double x) {
            switch (s.transform) {
            case Transform::identity: return x;
            case Transform::log: return std::exp(x);
            case Transform::logit: return s.lower + (s.upper - s.lower) * sig(x);
            }
            return x;
        };
        std::vector<double> y(days.size());
        y[0] = days[0].log->value;
        for (std::size_t t = 1; t < days.size(); ++t) {
            const auto& lg = *days[t].log;
            const double u = raw_drive(key, static_cast<int>(t), skip);
            const double delta = s.soft_cap * std::tanh(u / s.soft_cap);
            const double prop = lg.baseline + s.inertia * (fwd(y[t - 1]) - days[t - 1].log->baseline) + delta + lg.noise;
            const double lo = std::max(s.lower, y[t - 1] - s.slope_limit);
            const double hi = std::min(s.upper, y[t - 1] + s.slope_limit);
            y[t] = std::min(std::max(inv(prop), lo), hi);
        }
        return y;
    }

    GroundTruth run(const std::string& sub, const QueryParams& p) const {
        const int from = p.from.value_or(0), to = p.to.value_or(0);
        if (p.from && p.to && (from < 0 || to >= h() || from > to)) throw std::invalid_argument("window");
        const std::string& k = p.indicator;

        if (sub == "device_value_on_date") {
            if (!has(k, *p.day)) throw InfeasibleQuery("absent");
            auto g = gt(AnswerType::number, AnswerSource::device, spec(k).unit);
            g.numbers = {val(k, *p.day)};
            return g;
        }
        if (sub == "event_indicator_mapping") {
            auto g = gt(AnswerType::set, AnswerSource::event);
            auto s = keys_of(event(p.event_id));
            g.items.assign(s.begin(), s.end());
            return g;
        }
        if (sub == "most_indicator_rich_event") {
            std::map<std::size_t, std::set<std::string>> by;
            for (const auto& e : b.events) {
                if (e.start_day >= from && e.start_day <= to) by[keys_of(e).size()].insert(e.event_id);
            }
            if (by.empty()) throw InfeasibleQuery("none");
            auto g = gt(AnswerType::string, AnswerSource::event);
            choose(g, by.rbegin()->second);
            return g;
        }
        if (sub == "best_worst_month") {
            auto ms = months(k, from, to);
            if (ms.size() < 2) throw InfeasibleQuery("months");
            std::map<double, std::set<std::string>> by;
            for (auto& [m, v] : ms) by[mean(v)].insert(m);
            auto g = gt(AnswerType::string, AnswerSource::device);
            choose(g, p.direction == "highest" ? by.rbegin()->second : by.begin()->second);
            return g;
        }
        if (sub == "largest_month_change") {
            auto ms = months(k, from, to);
            std::map<double, std::set<std::string>> by;
            for (auto& [m, v] : ms) {
                auto n = ms.find(next_month(m));
                if (n != ms.end()) by[std::abs(mean(n->second) - mean(v))].insert(n->first);
            }
            if (by.empty()) throw InfeasibleQuery("pairs");
            auto g = gt(AnswerType::string, AnswerSource::device);
            choose(g, by.rbegin()->second);
            return g;
        }
        if (sub == "regime_change") {
            int best = -1;
            double gap = -1, pooled = 0;
            for (int t = from + 28; t + 27 <= to; ++t) {
                auto bv = values(k, t - 28, t - 1), av = values(k, t, t + 27);
                if (bv.size() < 14 || av.size() < 14) continue;
                const double d = std::abs(mean(av) - mean(bv));
                if (d > gap) {
                    gap = d;
                    best = t;
                    pooled = std::sqrt((pvar(bv) + pvar(av)) / 2);
                }
            }
            if (best < 0) throw InfeasibleQuery("split");
            if (gap > 2 * pooled) {
                auto g = gt(AnswerType::date, AnswerSource::derived);
                g.dates = {iso(best)};
                return g;
            }
            auto g = gt(AnswerType::string, AnswerSource::derived);
            g.items = {"none"};
            return g;
        }
        if (sub == "pre_post_event") {
            const int ts = event(p.event_id).start_day;
            if (ts < 14 || ts + 13 >= h()) throw InfeasibleQuery("edge");
            auto pre = values(k, ts - 14, ts - 1), post = values(k, ts, ts + 13);
            if (pre.size() < 7 || post.size() < 7) throw InfeasibleQuery("sparse");
            auto g = gt(AnswerType::number, AnswerSource::derived, spec(k).unit);
            g.numbers = {mean(post) - mean(pre)};
            return g;
        }
        if (sub == "during_event_ratio") {
            const auto& e = event(p.event_id);
            auto v = values(k, e.start_day, std::min(e.start_day + e.duration - 1, h() - 1));
            if (v.empty()) throw InfeasibleQuery("empty");
            auto g = gt(AnswerType::number, AnswerSource::derived, "1");
            g.numbers = {mean(v) / spec(k).baseline};
            return g;
        }
        if (sub == "shared_indicator_events") {
            const auto& target = event(p.event_id);
            const auto mine = keys_of(target);
            std::set<std::string> out;
            for (const auto& e : b.events) {
                if (e.event_id == target.event_id || e.start_day < from || e.start_day > to) continue;
                for (const auto& key : keys_of(e)) {
                    if (mine.count(key)) out.insert(e.event_id);
                }
            }
            auto g = gt(AnswerType::set, AnswerSource::event);
            g.items.assign(out.begin(), out.end());
            return g;
        }
        if (sub == "ever_abnormal") {
            int seen = 0, bad = 0;
            for (const auto& x : b.exams) {
                for (const auto& r : x.results) {
                    if (r.indicator_key != k) continue;
                    ++seen;
                    if (r.value < r.reference_range.low || r.value > r.reference_range.high) ++bad;
                }
            }
            if (!seen) throw InfeasibleQuery("never");
            auto g = gt(AnswerType::string, AnswerSource::exam);
            g.items = {bad ? "yes" : "no"};
            return g;
        }
        if (sub == "abnormal_deterioration") {
            const ExamVisit *a = nullptr, *z = nullptr;
            for (const auto& x : b.exams) {
                if (x.visit_day == from) a = &x;
                if (x.visit_day == to) z = &x;
            }
            if (!a || !z || from >= to) throw std::invalid_argument("visits");
            std::map<double, std::set<std::string>> by;
            for (const auto& r1 : a->results) {
                for (const auto& r2 : z->results) {
                    if (r1.indicator_key != r2.indicator_key) continue;
                    const double d = dist(r2.value, r2.reference_range) - dist(r1.value, r1.reference_range);
                    if (d > 0) by[d].insert(r1.indicator_key);
                }
            }
            if (by.empty()) throw InfeasibleQuery("none");
            auto g = gt(AnswerType::string, AnswerSource::exam);
            choose(g, by.rbegin()->second);
            return g;
        }
        if (sub == "abnormal_clusters") {
            std::vector<std::set<std::string>> seq;
            for (const auto& x : b.exams) {
                if (x.visit_day < from || x.visit_day > to) continue;
                std::set<std::string> s;
                for (const auto& r : x.results) {
                    if (r.value < r.reference_range.low || r.value > r.reference_range.high) s.insert(r.indicator_key);
                }
                seq.push_back(s);
            }
            if (seq.size() < 2) throw InfeasibleQuery("visits");
            std::set<std::string> pairs;
            for (std::size_t i = 1; i < seq.size(); ++i) {
                for (const auto& x : seq[i - 1]) {
                    for (const auto& y : seq[i - 1]) {
                        if (x < y && seq[i].count(x) && seq[i].count(y)) pairs.insert(x + "+" + y);
                    }
                }
            }
            auto g = gt(AnswerType::set, AnswerSource::exam);
            g.items.assign(pairs.begin(), pairs.end());
            return g;
        }
        if (sub == "events_above_2sigma") {
            std::vector<double> quiet, all;
            for (int t = 0; t < h(); ++t) {
                if (!has(k, t)) continue;
                all.push_back(val(k, t));
                if (t == 0 || raw_drive(k, t) == 0.0) quiet.push_back(val(k, t));
            }
            auto g = gt(AnswerType::set, AnswerSource::derived);
            auto& base = quiet.size() >= 2 ? quiet : all;
            if (quiet.size() < 2) g.flags.push_back("baseline_whole_series");
            const double m = mean(base), sd = std::sqrt(pvar(base));
            std::set<std::string> ids;
            for (int t = from; t <= to; ++t) {
                if (!has(k, t)) continue;
                const double v = val(k, t);
                if (p.direction == "above" ? !(v > m + 2 * sd) : !(v < m - 2 * sd)) continue;
                for (const auto& e : b.events) {
                    for (const auto& imp : e.impacts) {
                        if (imp.indicator_key == k && kernel(e, imp, t) > 0) ids.insert(e.event_id);
                    }
                }
            }
            g.items.assign(ids.begin(), ids.end());
            return g;
        }
        if (sub == "event_impact_ranking") {
            std::map<std::string, double> c;
            for (int t = from; t <= to; ++t) {
                for (const auto& [id, x] : shares(k, t)) c[id] += x;
            }
            auto g = gt(AnswerType::ranked_list, AnswerSource::derived, spec(k).unit);
            ranked(g, c);
            return g;
        }
        if (sub == "change_contribution") {
            std::map<std::string, double> c;
            for (const auto& [id, x] : shares(k, to)) c[id] += x;
            for (const auto& [id, x] : shares(k, from)) c[id] -= x;
            auto g = gt(AnswerType::ranked_list, AnswerSource::derived, spec(k).unit);
            ranked(g, c);
            return g;
        }
        if (sub == "change_contribution_counterfactual") {
            const auto& days = series(k).days;
            const double observed = days[static_cast<std::size_t>(to)].log->value - days[static_cast<std::size_t>(from)].log->value;
            std::map<std::string, double> c;
            for (const auto& e : b.events) {
                if (!e.impact_on(k) || e.start_day >= to || e.support_end() < from - 60) continue;
                const auto y = replay_without(k, e.event_id);
                c[e.event_id] = observed - (y[static_cast<std::size_t>(to)] - y[static_cast<std::size_t>(from)]);
            }
            auto g = gt(AnswerType::ranked_list, AnswerSource::derived, spec(k).unit);
            ranked(g, c);
            g.flags.push_back("counterfactual");
            return g;
        }
        if (sub == "window_extreme_value" || sub == "window_extreme_date") {
            auto v = values(k, from, to);
            if (v.empty()) throw InfeasibleQuery("empty");
            const bool lo = p.direction == "lowest";
            const double x = lo ? *std::min_element(v.begin(), v.end()) : *std::max_element(v.begin(), v.end());
            if (sub == "window_extreme_value") {
                auto g = gt(AnswerType::number, AnswerSource::device, spec(k).unit);
                g.numbers = {x};
                return g;
            }
            auto g = gt(AnswerType::date, AnswerSource::device);
            for (int t = from; t <= to; ++t) {
                if (has(k, t) && val(k, t) == x) g.dates.push_back(iso(t));
            }
            g.any_of = g.dates.size() > 1;
            return g;
        }
        if (sub == "window_mean_difference") {
            if (to - from != 27) throw std::invalid_argument("28 days");
            auto a = values(k, from, from + 13), z = values(k, from + 14, to);
            if (a.size() < 7 || z.size() < 7) throw InfeasibleQuery("sparse");
            auto g = gt(AnswerType::number, AnswerSource::derived, spec(k).unit);
            g.numbers = {mean(z) - mean(a)};
            return g;
        }
        if (sub == "window_baseline_ratio") {
            auto v = values(k, from, to);
            if (v.empty()) throw InfeasibleQuery("empty");
            auto g = gt(AnswerType::number, AnswerSource::derived, "1");
            g.numbers = {mean(v) / spec(k).baseline};
            return g;
        }
        if (sub == "indicator_pair_larger_shift") {
            const int len = to - from + 1, mid = from + len / 2;
            std::map<double, std::set<std::string>> by;
            for (const auto& key : {p.indicator, p.indicator_b}) {
                auto a = values(key, from, mid - 1), z = values(key, mid, to);
                if (a.size() < 3 || z.size() < 3) throw InfeasibleQuery("sparse");
                by[std::abs(mean(z) - mean(a)) / std::abs(spec(key).baseline)].insert(key);
            }
            auto g = gt(AnswerType::string, AnswerSource::derived);
            choose(g, by.rbegin()->second);
            return g;
        }
        if (sub == "device_out_of_reference" || sub == "device_out_of_range_days" || sub == "longest_out_of_range_run") {
            const auto& r = spec(k).reference_range.value();
            int count = 0, run = 0, longest = 0, seen = 0;
            for (int t = from; t <= to; ++t) {
                const bool out = has(k, t) && (val(k, t) < r.low || val(k, t) > r.high);
                seen += has(k, t);
                count += out;
                run = out ? run + 1 : 0;
                longest = std::max(longest, run);
            }
            if (!seen) throw InfeasibleQuery("empty");
            if (sub == "device_out_of_reference") {
                auto g = gt(AnswerType::string, AnswerSource::device);
                g.items = {count ? "yes" : "no"};
                return g;
            }
            auto g = gt(AnswerType::number, AnswerSource::device, "d");
            g.numbers = {static_cast<double>(sub == "device_out_of_range_days" ? count : longest)};
            return g;
        }
        if (sub == "days_above_2sigma_count") {
            auto all = values(k, 0, h() - 1);
            if (all.empty()) throw InfeasibleQuery("empty");
            const double thr = mean(all) + 2 * std::sqrt(pvar(all));
            int n = 0;
            for (int t = from; t <= to; ++t) n += has(k, t) && val(k, t) > thr;
            auto g = gt(AnswerType::number, AnswerSource::derived, "d");
            g.numbers = {static_cast<double>(n)};
            return g;
        }
        if (sub == "weekday_peak") {
            static const char* names[] = {"Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};
            std::map<int, std::vector<double>> by;
            for (int t = from; t <= to; ++t) {
                if (has(k, t)) by[weekday(t)].push_back(val(k, t));
            }
            if (by.size() < 7) throw InfeasibleQuery("weekday gap");
            std::map<double, std::set<std::string>> m;
            for (auto& [d, v] : by) m[mean(v)].insert(names[d]);
            auto g = gt(AnswerType::string, AnswerSource::derived);
            choose(g, m.rbegin()->second);
            return g;
        }
        if (sub == "largest_deviation_day") {
            std::map<double, std::vector<std::string>> m;
            for (int t = from; t <= to; ++t) {
                if (has(k, t)) m[std::abs(val(k, t) - spec(k).baseline)].push_back(iso(t));
            }
            if (m.empty()) throw InfeasibleQuery("empty");
            auto g = gt(AnswerType::date, AnswerSource::derived);
            g.dates = m.rbegin()->second;
            g.any_of = g.dates.size() > 1;
            return g;
        }
        throw std::invalid_argument("unknown subtype " + sub);
    }
};

} // namespace

GroundTruth oracle_ground_truth(const UserBundle& bundle, const std::string& subtype, const QueryParams& params) {
    return Oracle(bundle).run(subtype, params);
}

} // namespace hsynth
