#include "hsynth/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "json.hpp"

namespace hsynth {

using nlohmann::json;

bool gate(std::span<const Day> recent_starts, int active_count, Day day, const SparsityConfig& cfg) {
    if (day < cfg.warmup_days) return false;
    if (active_count >= cfg.max_active) return false;
    auto first = std::upper_bound(recent_starts.begin(), recent_starts.end(), day - 7);
    auto last = std::upper_bound(recent_starts.begin(), recent_starts.end(), day);
    return std::distance(first, last) < cfg.weekly_cap;
}

const CatalogEntry* EventCatalog::find(std::string_view id) const {
    for (const auto& e : entries) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

void check_catalog(const EventCatalog& catalog) {
    std::set<std::string> ids;
    for (const auto& e : catalog.entries) {
        auto fail = [&](const std::string& what) {
            throw std::invalid_argument("catalog entry '" + e.id + "': " + what);
        };
        if (e.id.empty() || !ids.insert(e.id).second) fail("missing or duplicate id");
        if (!(e.base_rate >= 0.0)) fail("negative rate");
        if (!(e.duration_median >= 1.0) || e.duration_log_sd < 0.0 || e.max_duration < 1) {
            fail("duration support must be >= 1 day");
        }
        if (e.impacts.empty()) fail("no impacts");
        for (const auto& i : e.impacts) {
            if (i.beta.lo > i.beta.hi) fail("beta range inverted for " + i.indicator_key);
            if (i.beta.lo * i.beta.hi < 0.0) fail("beta sign not fixed for " + i.indicator_key);
            if (!(i.tau_rise.lo > 0.0) || i.tau_rise.lo > i.tau_rise.hi || !(i.tau_fade.lo > 0.0) ||
                i.tau_fade.lo > i.tau_fade.hi) {
                fail("invalid timing range for " + i.indicator_key);
            }
        }
    }
}

ScriptedPolicy::ScriptedPolicy(const EventCatalog& catalog, PolicyWeights weights)
    : catalog_(&catalog), weights_(weights) {}

bool ScriptedPolicy::is_storyline(const CatalogEntry& entry, const PolicyContext& ctx) const {
    return std::find(entry.affinity.begin(), entry.affinity.end(), ctx.phase.theme_tag) != entry.affinity.end();
}

double ScriptedPolicy::weighted_rate(const CatalogEntry& entry, const PolicyContext& ctx) const {
    if (!entry.requires_any_condition.empty()) {
        bool eligible = std::any_of(entry.requires_any_condition.begin(), entry.requires_any_condition.end(),
                                    [&](const std::string& c) {
                                        return std::find(ctx.conditions.begin(), ctx.conditions.end(), c) !=
                                               ctx.conditions.end();
                                    });
        if (!eligible) return 0.0;
    }
    for (const auto& tag : entry.affinity) {
        if (std::find(ctx.contradicted_tags.begin(), ctx.contradicted_tags.end(), tag) !=
            ctx.contradicted_tags.end()) {
            return 0.0;
        }
    }
    if (is_storyline(entry, ctx)) {
        double w = weights_.storyline;
        if (ctx.phase_past_midpoint && ctx.storyline_events_in_phase == 0) w *= weights_.gap_multiplier;
        return entry.base_rate * w;
    }
    return entry.base_rate * weights_.texture;
}

double ScriptedPolicy::event_probability(const PolicyContext& ctx) const {
    double total = 0.0;
    for (const auto& e : catalog_->entries) total += weighted_rate(e, ctx);
    return std::clamp(total, 0.0, weights_.p_max);
}

int sample_duration(const CatalogEntry& entry, Stream& stream) {
    double d = entry.duration_median * std::exp(entry.duration_log_sd * stream.normal());
    return std::clamp(static_cast<int>(std::lround(d)), 1, entry.max_duration);
}

std::optional<EventDraft> ScriptedPolicy::decide(const PolicyContext& ctx, Stream& stream) const {
    std::vector<double> rates;
    rates.reserve(catalog_->entries.size());
    double total = 0.0;
    for (const auto& e : catalog_->entries) {
        rates.push_back(weighted_rate(e, ctx));
        total += rates.back();
    }
    if (total <= 0.0) return std::nullopt;
    const double p = std::clamp(total, 0.0, weights_.p_max);
    if (!stream.bernoulli(p)) return std::nullopt;

    double pick = stream.uniform() * total;
    std::size_t chosen = rates.size();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates[i] <= 0.0) continue;
        chosen = i;
        if (pick < rates[i]) break;
        pick -= rates[i];
    }
    const auto& entry = catalog_->entries[chosen];
    return EventDraft{entry.id, entry.category, sample_duration(entry, stream)};
}

// -- external policy --------------------------------------------------------

std::string policy_context_to_json(const PolicyContext& ctx) {
    json j;
    j["user_id"] = ctx.user_id;
    j["age"] = ctx.age;
    j["sex"] = std::string(to_string(ctx.sex));
    j["conditions"] = ctx.conditions;
    j["phase"] = {{"index", ctx.phase.index},
                  {"name", ctx.phase.name},
                  {"start_day", ctx.phase.start_day},
                  {"end_day", ctx.phase.end_day},
                  {"theme_tag", ctx.phase.theme_tag}};
    j["contradicted_tags"] = ctx.contradicted_tags;
    j["storyline_events_in_phase"] = ctx.storyline_events_in_phase;
    j["phase_past_midpoint"] = ctx.phase_past_midpoint;
    json dev = json::object();
    for (const auto& [k, vals] : ctx.recent_device) {
        json arr = json::array();
        for (const auto& v : vals) arr.push_back(v ? json(*v) : json(nullptr));
        dev[k] = arr;
    }
    j["recent_device"] = dev;
    json act = json::array();
    for (const auto& a : ctx.active) {
        act.push_back({{"event_id", a.event_id},
                       {"catalog_id", a.catalog_id},
                       {"category", std::string(to_string(a.category))},
                       {"start_day", a.start_day},
                       {"end_day", a.end_day}});
    }
    j["active_events"] = act;
    j["last_exam"] = ctx.last_exam_day
                         ? json{{"visit_day", *ctx.last_exam_day}, {"abnormal", ctx.last_exam_abnormal}}
                         : json(nullptr);
    j["calendar"] = {{"day", ctx.day}, {"weekday", ctx.weekday}, {"month", ctx.month}};
    return j.dump();
}

std::optional<EventDraft> parse_event_draft(const std::string& text, const EventCatalog& catalog) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("policy reply is not JSON: ") + e.what());
    }
    if (j.is_null()) return std::nullopt;
    if (!j.is_object()) throw std::invalid_argument("policy reply must be an object or null");
    for (const auto& [k, _] : j.items()) {
        if (k != "entry_id" && k != "category" && k != "duration") {
            throw std::invalid_argument("policy reply has unknown field '" + k + "'");
        }
    }
    if (!j.contains("entry_id") || !j["entry_id"].is_string() || !j.contains("duration") ||
        !j["duration"].is_number_integer()) {
        throw std::invalid_argument("policy reply requires string entry_id and integer duration");
    }
    EventDraft d;
    d.entry_id = j["entry_id"].get<std::string>();
    const auto* entry = catalog.find(d.entry_id);
    if (!entry) throw std::invalid_argument("policy reply names unknown catalog entry '" + d.entry_id + "'");
    d.category = entry->category;
    if (j.contains("category")) {
        if (!j["category"].is_string() || parse_enum<EventCategory>(j["category"].get<std::string>()) != d.category) {
            throw std::invalid_argument("policy reply category does not match catalog entry");
        }
    }
    d.duration = j["duration"].get<int>();
    if (d.duration < 1) throw std::invalid_argument("policy reply duration must be >= 1");
    return d;
}

JsonEventPolicy::JsonEventPolicy(const EventCatalog& catalog, JsonTransport transport)
    : catalog_(&catalog), transport_(std::move(transport)) {}

std::optional<EventDraft> JsonEventPolicy::decide(const PolicyContext& ctx, Stream&) const {
    std::optional<std::string> reply;
    try {
        reply = transport_(policy_context_to_json(ctx));
    } catch (const std::exception& e) {
        spdlog::warn("event policy transport error on day {}: {}", ctx.day, e.what());
        return std::nullopt;
    }
    if (!reply) {
        spdlog::warn("event policy transport error on day {}", ctx.day);
        return std::nullopt;
    }
    try {
        return parse_event_draft(*reply, *catalog_);
    } catch (const std::exception& e) {
        spdlog::warn("event policy schema error on day {}: {}", ctx.day, e.what());
        return std::nullopt;
    }
}

// -- instantiation and expiry ----------------------------------------------

Event instantiate(const EventDraft& draft, const EventCatalog& catalog, std::span<const std::string> indicator_keys,
                  Day day, int phase_index, std::string event_id, Stream& stream) {
    const auto* entry = catalog.find(draft.entry_id);
    if (!entry) throw std::invalid_argument("draft references unknown catalog entry '" + draft.entry_id + "'");
    Event e;
    e.event_id = std::move(event_id);
    e.category = entry->category;
    e.name = entry->name;
    e.catalog_id = entry->id;
    e.start_day = day;
    e.duration = std::max(1, draft.duration);
    e.phase_index = phase_index;
    for (const auto& t : entry->impacts) {
        if (std::find(indicator_keys.begin(), indicator_keys.end(), t.indicator_key) == indicator_keys.end()) {
            throw std::invalid_argument("catalog entry '" + entry->id + "' targets unknown indicator '" +
                                        t.indicator_key + "'");
        }
        EventImpact imp;
        imp.indicator_key = t.indicator_key;
        imp.beta = stream.uniform(t.beta.lo, t.beta.hi);
        imp.tau_rise = stream.uniform(t.tau_rise.lo, t.tau_rise.hi);
        imp.tau_fade = stream.uniform(t.tau_fade.lo, t.tau_fade.hi);
        e.impacts.push_back(std::move(imp));
    }
    return e;
}

std::vector<const Event*> expire(std::span<const Event* const> active, Day day) {
    std::vector<const Event*> kept;
    kept.reserve(active.size());
    for (const Event* e : active) {
        if (!(day > e->support_end())) kept.push_back(e);
    }
    return kept;
}

} // namespace hsynth
