#include "hsynth/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "hsynth/audit.hpp"
#include "hsynth/dynamics.hpp"
#include "hsynth/exams.hpp"

namespace hsynth {

namespace {

constexpr const char* kDerivation =
    "user_seed = mix64(mix64(root_seed) ^ mix64(user_index + 0x5bd1e995)); "
    "stream seed = digest(user_seed, tag, day, indicator)";

const std::vector<std::string> kLifestyleTags{"desk_job",      "shift_work",  "regular_exercise", "smoker",
                                              "social_drinker", "vegetarian", "frequent_travel",  "caregiver"};

// Steps the device process one day at a time. Shared by generation and
// replay so both follow one arithmetic path.
class DeviceSimulator {
public:
    DeviceSimulator(std::vector<const IndicatorSpec*> specs, std::uint64_t seed, const Calendar& calendar,
                    double absence_rate, KernelMode mode, int horizon)
        : specs_(std::move(specs)), seed_(seed), calendar_(&calendar), absence_rate_(absence_rate), mode_(mode) {
        std::vector<IndicatorSpec> copies;
        for (const auto* s : specs_) copies.push_back(*s);
        noise_ = NoiseModel::from_specs(copies);
        series_.resize(specs_.size());
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            series_[i].indicator_key = specs_[i]->key;
            series_[i].days.reserve(static_cast<std::size_t>(horizon));
        }
        prev_natural_.assign(specs_.size(), 0.0);
        prev_state_.assign(specs_.size(), 0.0);
    }

    void step(Day t, std::span<const Event* const> active) {
        const CalendarDay today = calendar_->at(t);
        std::vector<double> eps;
        if (t > 0) {
            Stream noise_stream = make_stream(seed_, "noise", t);
            eps = draw_noise(noise_, noise_stream);
        }
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            const IndicatorSpec& spec = *specs_[i];
            Decomposition log;
            if (t == 0) {
                // initial state: baseline plus seasonal level, range-clamped
                log.baseline = baseline_level(spec, today);
                log.proposal = log.baseline;
                log.proposal_natural = from_transform(log.proposal, spec);
                log.value = std::clamp(log.proposal_natural, spec.lower, spec.upper);
                log.range_violated = log.proposal_natural < spec.lower || log.proposal_natural > spec.upper;
                log.clipped = log.value != log.proposal_natural;
            } else {
                const Superposition drive = event_drive(spec, active, t, mode_);
                const Proposal p = propose_value(spec, prev_state_[i], today, calendar_->at(t - 1), drive.delta,
                                                 eps[i]);
                const Projection proj = project(p.value, prev_natural_[i], spec);
                log.baseline = p.baseline;
                log.ar_residual = p.ar_residual;
                log.event_raw = drive.raw;
                log.event_delta = drive.delta;
                log.noise = p.noise;
                log.proposal = p.value;
                log.proposal_natural = proj.proposal_natural;
                log.value = proj.value;
                log.range_violated = proj.range_violated;
                log.slope_violated = proj.slope_violated;
                log.clipped = proj.clipped;
            }
            prev_natural_[i] = log.value;
            prev_state_[i] = to_transform_state(log.value, spec);

            DeviceDay day;
            if (absence_rate_ > 0.0) {
                Stream s = make_stream(seed_, "absence", t, spec.key);
                if (s.bernoulli(absence_rate_)) {
                    day.absent_reason = static_cast<AbsenceReason>(s.uniform_int(0, 2));
                }
            }
            if (!day.absent_reason) day.value = log.value;
            day.log = log;
            series_[i].days.push_back(std::move(day));
        }
    }

    [[nodiscard]] const DeviceSeries& series(std::size_t i) const { return series_[i]; }
    [[nodiscard]] std::size_t size() const { return specs_.size(); }
    [[nodiscard]] const IndicatorSpec& spec(std::size_t i) const { return *specs_[i]; }

    std::map<std::string, DeviceSeries> take() {
        std::map<std::string, DeviceSeries> out;
        for (auto& s : series_) {
            std::string key = s.indicator_key;
            out.emplace(std::move(key), std::move(s));
        }
        return out;
    }

private:
    std::vector<const IndicatorSpec*> specs_;
    std::uint64_t seed_;
    const Calendar* calendar_;
    double absence_rate_;
    KernelMode mode_;
    NoiseModel noise_;
    std::vector<DeviceSeries> series_;
    std::vector<double> prev_natural_;
    std::vector<double> prev_state_;
};

std::vector<const IndicatorSpec*> device_specs(const std::vector<IndicatorSpec>& specs) {
    std::vector<const IndicatorSpec*> out;
    for (const auto& s : specs) {
        if (s.on_device) out.push_back(&s);
    }
    return out;
}

bool live_on(const Event& e, Day t) { return e.start_day <= t && !(t > e.support_end()); }

std::string event_id_for(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "evt-%04zu", n);
    return buf;
}

} // namespace

std::vector<int> apportion(int total, const std::vector<double>& weights) {
    std::vector<int> counts(weights.size(), 0);
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (weights.empty() || total <= 0 || !(sum > 0.0)) return counts;
    std::vector<std::pair<double, std::size_t>> rema;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = total * weights[i] / sum;
        // guard against 33.000000000000004 style representation error
        const double fl = std::floor(exact + 1e-9);
        counts[i] = static_cast<int>(fl);
        assigned += counts[i];
        rema.emplace_back(std::max(0.0, exact - fl), i);
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first + 1e-12; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[rema[k % rema.size()].second];
    return counts;
}

std::string user_id_for(int user_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "user-%04d", user_index);
    return buf;
}

Generator::Generator(GeneratorConfig config, Catalogs catalogs)
    : config_(std::move(config)), catalogs_(std::make_shared<const Catalogs>(std::move(catalogs))) {
    check_config(config_);
    check_catalogs(*catalogs_);
    policy_ = std::make_shared<ScriptedPolicy>(catalogs_->events, config_.weights);
    template_planner_ = std::make_shared<TemplatePlanner>(catalogs_->themes);
    planner_ = template_planner_;
}

void Generator::set_policy(std::function<std::shared_ptr<const EventPolicy>(const Catalogs&)> factory) {
    policy_ = factory(*catalogs_);
}

void Generator::set_planner(std::function<std::shared_ptr<const Planner>(const Catalogs&)> factory) {
    planner_ = factory(*catalogs_);
}

std::vector<UserSpec> Generator::cohort() const {
    const auto& cells = catalogs_->mixture;
    const std::array strata{AgeStratum::young, AgeStratum::middle, AgeStratum::senior};
    std::vector<double> stratum_weight(strata.size(), 0.0);
    for (const auto& c : cells) stratum_weight[static_cast<std::size_t>(c.stratum)] += c.weight;
    const auto per_stratum = apportion(config_.users, stratum_weight);

    std::vector<std::string> assignment;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        std::vector<double> w;
        std::vector<const MixtureCell*> members;
        for (const auto& c : cells) {
            if (c.stratum == strata[s]) {
                w.push_back(c.weight);
                members.push_back(&c);
            }
        }
        const auto per_cell = apportion(per_stratum[s], w);
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (int k = 0; k < per_cell[i]; ++k) assignment.push_back(members[i]->name);
        }
    }
    Stream shuffle = make_stream(config_.root_seed, "cohort");
    for (std::size_t i = assignment.size(); i > 1; --i) {
        std::swap(assignment[i - 1], assignment[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<int>(i) - 1))]);
    }

    std::vector<UserSpec> out;
    for (int u = 0; u < config_.users; ++u) {
        UserSpec spec;
        spec.user_index = u;
        spec.user_seed = derive_user_seed(config_.root_seed, static_cast<std::uint64_t>(u));
        Stream h = make_stream(spec.user_seed, "horizon");
        spec.horizon = h.uniform_int(config_.horizon_min, config_.horizon_max);
        spec.cell = assignment[static_cast<std::size_t>(u)];
        out.push_back(std::move(spec));
    }
    return out;
}

Profile Generator::sample_profile(const UserSpec& user) const {
    const auto& cells = catalogs_->mixture;
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& c) { return c.name == user.cell; });
    if (it == cells.end()) throw std::invalid_argument("unknown mixture cell '" + user.cell + "'");
    Stream s = make_stream(user.user_seed, "profile");
    Profile p;
    p.user_id = user_id_for(user.user_index);
    auto [lo, hi] = age_bounds(it->stratum);
    p.age = s.uniform_int(lo, hi);
    p.age_stratum = it->stratum;
    p.sex = s.bernoulli(0.53) ? Sex::male : Sex::female;
    p.conditions = it->conditions;
    std::sort(p.conditions.begin(), p.conditions.end());
    p.mixture_cell = it->name;
    std::set<std::string> meds;
    for (const auto& c : p.conditions) {
        auto m = catalogs_->medications.find(c);
        if (m != catalogs_->medications.end()) meds.insert(m->second.begin(), m->second.end());
    }
    p.medications.assign(meds.begin(), meds.end());
    std::vector<std::string> tags = kLifestyleTags;
    for (int k = 0; k < 2; ++k) {
        const int pick = s.uniform_int(k, static_cast<int>(tags.size()) - 1);
        std::swap(tags[static_cast<std::size_t>(k)], tags[static_cast<std::size_t>(pick)]);
    }
    p.lifestyle_tags = {tags[0], tags[1]};
    std::sort(p.lifestyle_tags.begin(), p.lifestyle_tags.end());
    return p;
}

UserBundle Generator::generate_user(const UserSpec& user) const {
    const std::uint64_t seed = user.user_seed;
    const int horizon = user.horizon;
    UserBundle b;
    b.profile = sample_profile(user);
    {
        Stream s = make_stream(seed, "plan");
        b.plan = planner_->plan(b.profile, horizon, config_.epoch, s);
    }
    {
        std::vector<IndicatorTemplate> templates = catalogs_->indicators;
        Stream s = make_stream(seed, "baseline");
        b.indicators = personalize(templates, b.profile, s);
    }
    b.seeds = SeedRecord{config_.root_seed, user.user_index, seed, kDerivation, config_.absence_rate,
                         config_.kernel_mode};

    const Calendar calendar(config_.epoch);
    std::vector<std::string> keys;
    for (const auto& s : b.indicators) keys.push_back(s.key);
    DeviceSimulator device(device_specs(b.indicators), seed, calendar, config_.absence_rate, config_.kernel_mode,
                           horizon);

    std::vector<Day> exam_days;
    {
        Stream s = make_stream(seed, "exam_schedule");
        exam_days = schedule_exams(horizon, config_.exam_density, s);
    }
    std::size_t next_exam = 0;

    std::vector<Event>& events = b.events;
    events.reserve(512);
    std::vector<std::size_t> active; // indices into events, creation order
    std::vector<Day> starts;
    std::map<int, int> storyline_in_phase;

    auto active_ptrs = [&]() {
        std::vector<const Event*> out;
        out.reserve(active.size());
        for (auto i : active) out.push_back(&events[i]);
        return out;
    };

    for (Day t = 0; t < horizon; ++t) {
        const Phase& phase = phase_at(b.plan, t);

        // (A) gated event decision
        if (gate(starts, static_cast<int>(active.size()), t, config_.sparsity)) {
            PolicyContext ctx;
            ctx.user_id = b.profile.user_id;
            ctx.age = b.profile.age;
            ctx.sex = b.profile.sex;
            ctx.conditions = b.profile.conditions;
            ctx.phase = phase;
            ctx.contradicted_tags = contradicted_tags(catalogs_->themes, phase.theme_tag);
            ctx.storyline_events_in_phase = storyline_in_phase[phase.index];
            ctx.phase_past_midpoint = 2 * (t - phase.start_day) >= phase.length();
            for (std::size_t i = 0; i < device.size(); ++i) {
                auto& vals = ctx.recent_device[device.spec(i).key];
                const auto& days = device.series(i).days;
                const std::size_t from = days.size() > 7 ? days.size() - 7 : 0;
                for (std::size_t d = from; d < days.size(); ++d) vals.push_back(days[d].value);
            }
            for (auto i : active) {
                const auto& e = events[i];
                ctx.active.push_back({e.event_id, e.catalog_id, e.category, e.start_day, e.end_day()});
            }
            if (!b.exams.empty()) {
                ctx.last_exam_day = b.exams.back().visit_day;
                for (const auto& r : b.exams.back().results) {
                    if (r.status == ExamStatus::abnormal) ctx.last_exam_abnormal.push_back(r.indicator_key);
                }
            }
            ctx.day = t;
            ctx.weekday = calendar.weekday(t);
            ctx.month = calendar.month(t);

            Stream ps = make_stream(seed, "policy", t);
            if (auto draft = policy_->decide(ctx, ps)) {
                Stream es = make_stream(seed, "event", t);
                events.push_back(instantiate(*draft, catalogs_->events, keys, t, phase.index,
                                             event_id_for(events.size() + 1), es));
                active.push_back(events.size() - 1);
                starts.push_back(t);
                const auto* entry = catalogs_->events.find(draft->entry_id);
                if (entry && std::find(entry->affinity.begin(), entry->affinity.end(), phase.theme_tag) !=
                                 entry->affinity.end()) {
                    ++storyline_in_phase[phase.index];
                }
            }
        }

        // (B) device update
        const auto live = active_ptrs();
        device.step(t, live);

        // (C) exams
        if (next_exam < exam_days.size() && exam_days[next_exam] == t) {
            ++next_exam;
            ExamVisit visit;
            visit.visit_day = t;
            const CalendarDay cd = calendar.at(t);
            for (const auto& spec : b.indicators) {
                if (!spec.on_exam) continue;
                std::optional<double> anchor_value;
                if (spec.on_device) {
                    for (std::size_t i = 0; i < device.size(); ++i) {
                        if (device.spec(i).key == spec.key) anchor_value = window_stat(device.series(i), spec, t);
                    }
                }
                if (!anchor_value) {
                    anchor_value = latent_truth(spec, event_drive(spec, live, t, config_.kernel_mode).delta, cd);
                }
                Stream xs = make_stream(seed, "exam", t, spec.key);
                ExamResult r;
                r.indicator_key = spec.key;
                r.value = anchor(*anchor_value, spec, xs);
                r.unit = spec.unit;
                r.reference_range = *spec.reference_range;
                r.status = derive_status(r.value, r.reference_range);
                visit.results.push_back(std::move(r));
            }
            visit.summary = exam_summary(visit.results);
            b.exams.push_back(std::move(visit));
        }

        // expiry
        std::erase_if(active, [&](std::size_t i) { return !live_on(events[i], t + 1); });
    }

    b.device = device.take();
    b.audit = audit_bundle(b);
    return b;
}

void Generator::generate_cohort(int threads, const std::function<void(UserBundle&&)>& sink) const {
    const auto users = cohort();
    if (threads <= 0) threads = config_.threads;
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min<int>(threads, static_cast<int>(users.size()));
    if (threads <= 1) {
        for (const auto& u : users) sink(generate_user(u));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= users.size()) return;
            try {
                sink(generate_user(users[i]));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = users.size();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<UserBundle> Generator::generate_cohort(int threads) const {
    const auto n = static_cast<std::size_t>(config_.users);
    std::vector<UserBundle> out(n);
    generate_cohort(threads, [&](UserBundle&& b) {
        const auto slot = static_cast<std::size_t>(b.seeds.user_index);
        out[slot] = std::move(b);
    });
    return out;
}

std::map<std::string, DeviceSeries> simulate_device(const UserBundle& bundle, const std::vector<Event>& events) {
    const Calendar calendar(bundle.plan.epoch);
    const int horizon = bundle.plan.horizon_days;
    DeviceSimulator device(device_specs(bundle.indicators), bundle.seeds.user_seed, calendar,
                           bundle.seeds.absence_rate, bundle.seeds.kernel_mode, horizon);
    std::vector<const Event*> live;
    for (Day t = 0; t < horizon; ++t) {
        live.clear();
        for (const auto& e : events) {
            if (live_on(e, t)) live.push_back(&e);
        }
        device.step(t, live);
    }
    return device.take();
}

std::map<std::string, DeviceSeries> resimulate_without(const UserBundle& bundle, const std::string& event_id) {
    if (!bundle.event(event_id)) throw std::invalid_argument("unknown event '" + event_id + "'");
    std::vector<Event> kept;
    kept.reserve(bundle.events.size());
    for (const auto& e : bundle.events) {
        if (e.event_id != event_id) kept.push_back(e);
    }
    return simulate_device(bundle, kept);
}

} // namespace hsynth
