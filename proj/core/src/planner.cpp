#include "hsynth/planner.hpp"

#include <algorithm>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "json.hpp"

namespace hsynth {

using nlohmann::json;

namespace {

constexpr int kMinPhaseDays = 30;
constexpr int kJitterDays = 15;

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

} // namespace

TemplatePlanner::TemplatePlanner(std::vector<ThemeTemplate> themes) : themes_(std::move(themes)) {
    if (themes_.empty()) throw std::invalid_argument("template planner needs at least one theme");
}

TrajectoryPlan TemplatePlanner::plan(const Profile& profile, int horizon, const std::string& epoch,
                                     Stream& stream) const {
    if (horizon < 180) throw std::invalid_argument("planning horizon must be at least 180 days");
    const int n = target_phase_count(horizon);

    // Jittered boundaries, clamped so that every phase keeps >= 30 days.
    std::vector<Day> bounds{0};
    for (int i = 1; i < n; ++i) {
        const double nominal = static_cast<double>(horizon) * i / n;
        Day b = static_cast<Day>(std::lround(nominal)) + stream.uniform_int(-kJitterDays, kJitterDays);
        const Day lo = bounds.back() + kMinPhaseDays;
        const Day hi = horizon - kMinPhaseDays * (n - i);
        bounds.push_back(std::clamp(b, lo, hi));
    }
    bounds.push_back(horizon);

    const bool chronic = !profile.conditions.empty();
    std::vector<const ThemeTemplate*> pool;
    for (const auto& t : themes_) {
        if (t.audience == Audience::any || (t.audience == Audience::chronic) == chronic) pool.push_back(&t);
    }
    if (pool.empty()) {
        for (const auto& t : themes_) pool.push_back(&t);
    }

    TrajectoryPlan plan;
    plan.epoch = epoch;
    plan.horizon_days = horizon;
    const ThemeTemplate* previous = nullptr;
    for (int i = 0; i < n; ++i) {
        const ThemeTemplate* theme = nullptr;
        for (int attempt = 0; attempt < 8; ++attempt) {
            theme = pool[static_cast<std::size_t>(stream.uniform_int(0, static_cast<int>(pool.size()) - 1))];
            if (theme != previous || pool.size() == 1) break;
        }
        previous = theme;
        plan.phases.push_back(Phase{i, theme->name, bounds[static_cast<std::size_t>(i)],
                                    bounds[static_cast<std::size_t>(i + 1)], theme->tag});
    }
    const std::string focus = chronic ? "managing " + join(profile.conditions, " and ") : "sustaining a healthy lifestyle";
    plan.overall_theme = std::to_string(n) + "-phase arc over " + std::to_string(horizon) + " days focused on " + focus;
    return plan;
}

JsonPlanner::JsonPlanner(JsonTransport transport, const TemplatePlanner& fallback)
    : transport_(std::move(transport)), fallback_(&fallback) {}

TrajectoryPlan JsonPlanner::plan(const Profile& profile, int horizon, const std::string& epoch,
                                 Stream& stream) const {
    if (horizon < 180) throw std::invalid_argument("planning horizon must be at least 180 days");
    json req{{"profile",
              {{"user_id", profile.user_id},
               {"age", profile.age},
               {"sex", std::string(to_string(profile.sex))},
               {"conditions", profile.conditions}}},
             {"horizon", horizon},
             {"epoch", epoch}};
    try {
        auto reply = transport_(req.dump());
        if (!reply) throw std::runtime_error("transport failure");
        auto j = json::parse(*reply);
        TrajectoryPlan plan;
        plan.epoch = epoch;
        plan.horizon_days = horizon;
        plan.overall_theme = j.at("overall_theme").get<std::string>();
        int index = 0;
        for (const auto& p : j.at("phases")) {
            plan.phases.push_back(Phase{index++, p.at("name").get<std::string>(), p.at("start_day").get<Day>(),
                                        p.at("end_day").get<Day>(), p.at("theme_tag").get<std::string>()});
        }
        check_plan(plan);
        return plan;
    } catch (const std::exception& e) {
        spdlog::warn("planner reply rejected ({}); using template planner", e.what());
        return fallback_->plan(profile, horizon, epoch, stream);
    }
}

const Phase& phase_at(const TrajectoryPlan& plan, Day day) {
    if (day < 0 || day >= plan.horizon_days || plan.phases.empty()) {
        throw std::out_of_range("day " + std::to_string(day) + " outside plan horizon");
    }
    auto it = std::upper_bound(plan.phases.begin(), plan.phases.end(), day,
                               [](Day d, const Phase& p) { return d < p.start_day; });
    return *std::prev(it);
}

std::vector<std::string> contradicted_tags(const std::vector<ThemeTemplate>& themes, const std::string& tag) {
    for (const auto& t : themes) {
        if (t.tag == tag) return t.contradicts;
    }
    return {};
}

void check_plan(const TrajectoryPlan& plan) {
    if (plan.phases.empty()) throw std::invalid_argument("plan has no phases");
    Day cursor = 0;
    for (const auto& p : plan.phases) {
        if (p.start_day != cursor) throw std::invalid_argument("plan phases leave a gap or overlap");
        if (p.length() < kMinPhaseDays) throw std::invalid_argument("plan phase shorter than 30 days");
        cursor = p.end_day;
    }
    if (cursor != plan.horizon_days) throw std::invalid_argument("plan phases do not cover the horizon");
}

} // namespace hsynth
