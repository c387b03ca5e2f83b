#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsynth/model.hpp"
#include "hsynth/random.hpp"

namespace hsynth {

struct SparsityConfig {
    int weekly_cap = 3;  ///< max event starts in any trailing 7-day window
    int max_active = 12; ///< cap on concurrently active events (incl. fade-out)
    int warmup_days = 7; ///< event-free span at the start of the horizon
    bool operator==(const SparsityConfig&) const = default;
};

/// Deterministic sparsity gate. @p recent_starts must be sorted.
bool gate(std::span<const Day> recent_starts, int active_count, Day day, const SparsityConfig& cfg);

struct ValueRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct ImpactTemplate {
    std::string indicator_key;
    ValueRange beta;     ///< transform-domain units; lo and hi share a sign
    ValueRange tau_rise; ///< days
    ValueRange tau_fade; ///< days
};

struct CatalogEntry {
    std::string id;
    EventCategory category = EventCategory::health_event;
    std::string name;
    std::vector<std::string> affinity;            ///< phase theme tags this entry realizes
    std::vector<std::string> requires_any_condition; ///< empty = anyone
    double base_rate = 0.0;                        ///< per gated day
    double duration_median = 1.0;                  ///< days, log-normal median
    double duration_log_sd = 0.0;
    int max_duration = 730;
    std::vector<ImpactTemplate> impacts;
};

struct EventCatalog {
    std::vector<CatalogEntry> entries;
    [[nodiscard]] const CatalogEntry* find(std::string_view id) const;
};

/// Throws std::invalid_argument on negative rates, sign-mixed beta ranges,
/// empty impact lists or non-positive timing.
void check_catalog(const EventCatalog& catalog);

struct PolicyWeights {
    double storyline = 4.0;      ///< affinity tag matches the phase theme
    double texture = 1.0;        ///< neutral entries
    double gap_multiplier = 2.0; ///< storyline boost once a phase is past its midpoint without storyline events
    double p_max = 0.35;         ///< per gated day
    bool operator==(const PolicyWeights&) const = default;
};

struct ActiveEventSummary {
    std::string event_id;
    std::string catalog_id;
    EventCategory category = EventCategory::health_event;
    Day start_day = 0;
    Day end_day = 0;
};

/// Everything a policy may condition on for day `day`.
struct PolicyContext {
    std::string user_id;
    int age = 0;
    Sex sex = Sex::female;
    std::vector<std::string> conditions;
    Phase phase;
    std::vector<std::string> contradicted_tags; ///< tags the current phase theme rules out
    int storyline_events_in_phase = 0;
    bool phase_past_midpoint = false;
    /// Trailing device values, at most 7 days, oldest first; absent days are nullopt.
    std::map<std::string, std::vector<std::optional<double>>> recent_device;
    std::vector<ActiveEventSummary> active;
    std::optional<Day> last_exam_day;
    std::vector<std::string> last_exam_abnormal;
    Day day = 0;
    int weekday = 0;
    std::string month;
};

struct EventDraft {
    std::string entry_id;
    EventCategory category = EventCategory::health_event;
    int duration = 1;
    bool operator==(const EventDraft&) const = default;
};

/// Plug point for event decisions. Called only on days the gate passed.
class EventPolicy {
public:
    virtual ~EventPolicy() = default;
    virtual std::optional<EventDraft> decide(const PolicyContext& ctx, Stream& stream) const = 0;
};

/// Catalog-rate policy: Bernoulli(p_t) then a categorical mark proportional to
/// phase-weighted rates, then a log-normal duration.
class ScriptedPolicy final : public EventPolicy {
public:
    ScriptedPolicy(const EventCatalog& catalog, PolicyWeights weights = {});

    std::optional<EventDraft> decide(const PolicyContext& ctx, Stream& stream) const override;

    /// Weighted rate of @p entry under @p ctx (0 when excluded).
    [[nodiscard]] double weighted_rate(const CatalogEntry& entry, const PolicyContext& ctx) const;
    [[nodiscard]] bool is_storyline(const CatalogEntry& entry, const PolicyContext& ctx) const;
    /// Event probability p_t for the context.
    [[nodiscard]] double event_probability(const PolicyContext& ctx) const;

private:
    const EventCatalog* catalog_;
    PolicyWeights weights_;
};

/// Sends the serialized context to an external endpoint. A transport failure
/// (nullopt) or a schema-invalid reply yields "no event" and a logged warning.
using JsonTransport = std::function<std::optional<std::string>(const std::string& request)>;

class JsonEventPolicy final : public EventPolicy {
public:
    JsonEventPolicy(const EventCatalog& catalog, JsonTransport transport);
    std::optional<EventDraft> decide(const PolicyContext& ctx, Stream& stream) const override;

private:
    const EventCatalog* catalog_;
    JsonTransport transport_;
};

std::string policy_context_to_json(const PolicyContext& ctx);
/// Parses a policy reply ("null" or an EventDraft object); throws std::invalid_argument.
std::optional<EventDraft> parse_event_draft(const std::string& text, const EventCatalog& catalog);

/// Draws a duration from @p entry's log-normal distribution (at least 1 day).
int sample_duration(const CatalogEntry& entry, Stream& stream);

/// Samples impacts and renders the event. Throws std::invalid_argument when
/// an impact targets an indicator outside @p indicator_keys.
Event instantiate(const EventDraft& draft, const EventCatalog& catalog,
                  std::span<const std::string> indicator_keys, Day day, int phase_index,
                  std::string event_id, Stream& stream);

/// Drops events whose fade-out window ended before @p day.
std::vector<const Event*> expire(std::span<const Event* const> active, Day day);

} // namespace hsynth
