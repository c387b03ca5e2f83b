#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hsynth/calendar.hpp"

namespace hsynth {

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class Sex { male, female };
enum class AgeStratum { young, middle, senior }; ///< 18-44, 45-64, 65+
enum class IndicatorGroup { sleep, cardiovascular, metabolic, activity, weight, blood_oxygen };
enum class Transform { identity, log, logit };
enum class SpeedClass { fast, slow };
enum class EventCategory { diet_change, exercise_change, health_event, long_term_habit };
enum class AbsenceReason { device_not_worn, sensor_error, scheduled_gap };
enum class ExamStatus { normal, abnormal };

enum class Dimension { Lookup, Trend, Comparison, Anomaly, Explanation };
enum class Tier { Easy, Medium, Hard };
enum class AnswerType { number, date, string, set, ranked_list };
enum class AnswerSource { device, exam, event, derived };

inline constexpr std::array kAllDimensions{Dimension::Lookup, Dimension::Trend, Dimension::Comparison,
                                           Dimension::Anomaly, Dimension::Explanation};
inline constexpr std::array kAllTiers{Tier::Easy, Tier::Medium, Tier::Hard};
inline constexpr std::array kAllGroups{IndicatorGroup::sleep,    IndicatorGroup::cardiovascular,
                                       IndicatorGroup::metabolic, IndicatorGroup::activity,
                                       IndicatorGroup::weight,    IndicatorGroup::blood_oxygen};

std::string_view to_string(Sex v);
std::string_view to_string(AgeStratum v);
std::string_view to_string(IndicatorGroup v);
std::string_view to_string(Transform v);
std::string_view to_string(SpeedClass v);
std::string_view to_string(EventCategory v);
std::string_view to_string(AbsenceReason v);
std::string_view to_string(ExamStatus v);
std::string_view to_string(Dimension v);
std::string_view to_string(Tier v);
std::string_view to_string(AnswerType v);
std::string_view to_string(AnswerSource v);

/// Inverse of to_string for every enum above; throws std::invalid_argument on
/// unknown names.
template <class E> E parse_enum(std::string_view name);

/// Lower and upper age of a stratum (upper inclusive; 65+ is capped at 90).
std::pair<int, int> age_bounds(AgeStratum s);
AgeStratum stratum_of_age(int age);

// ---------------------------------------------------------------------------
// Profile and plan
// ---------------------------------------------------------------------------

struct Profile {
    std::string user_id;
    int age = 18;
    Sex sex = Sex::female;
    AgeStratum age_stratum = AgeStratum::young;
    std::vector<std::string> conditions; ///< sorted, unique
    std::vector<std::string> lifestyle_tags;
    std::vector<std::string> medications;
    std::string mixture_cell;

    bool operator==(const Profile&) const = default;
};

/// Half-open span [start_day, end_day).
struct Phase {
    int index = 0;
    std::string name;
    Day start_day = 0;
    Day end_day = 0;
    std::string theme_tag;

    [[nodiscard]] int length() const { return end_day - start_day; }
    bool operator==(const Phase&) const = default;
};

struct TrajectoryPlan {
    std::string overall_theme;
    std::string epoch; ///< ISO date of day 0
    int horizon_days = 0;
    std::vector<Phase> phases;

    bool operator==(const TrajectoryPlan&) const = default;
};

// ---------------------------------------------------------------------------
// Indicators
// ---------------------------------------------------------------------------

struct ReferenceRange {
    double low = 0.0;
    double high = 0.0;
    bool operator==(const ReferenceRange&) const = default;
};

/// One row of the noise loading matrix: a global factor plus the factor of
/// the indicator's group. Both in transform-domain units.
struct NoiseLoadings {
    double global = 0.0;
    double group = 0.0;
    bool operator==(const NoiseLoadings&) const = default;
};

/// Static per-indicator physiology. Natural-unit quantities unless noted.
struct IndicatorSpec {
    std::string key;
    std::string unit; ///< UCUM code
    IndicatorGroup group = IndicatorGroup::cardiovascular;
    double baseline = 0.0;                 ///< mu_k
    std::array<double, 7> weekday_offsets{}; ///< indexed Sunday..Saturday
    double annual_amplitude = 0.0;
    double annual_phase = 0.0; ///< fraction of a year
    double inertia = 0.0;      ///< phi_k in [0, 1)
    double lower = 0.0;        ///< L_k
    double upper = 0.0;        ///< U_k
    double slope_limit = 1.0;  ///< Delta_k, unit/day
    double soft_cap = 1.0;     ///< M_k, transform-domain units
    Transform transform = Transform::identity;
    NoiseLoadings noise_loadings;
    double idio_variance = 1.0; ///< entry of D, transform-domain units squared
    SpeedClass speed_class = SpeedClass::fast;
    bool on_device = true;
    bool on_exam = false;
    std::optional<ReferenceRange> reference_range; ///< required when on_exam

    [[nodiscard]] bool overlap() const { return on_device && on_exam; }
    bool operator==(const IndicatorSpec&) const = default;
};

/// Throws std::invalid_argument naming the first violated invariant.
void check_indicator_spec(const IndicatorSpec& spec);

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

/// beta is a signed magnitude in the indicator's transform-domain units.
/// Kernel steepness (6 / tau_rise) and decay (3 / tau_fade) are derived.
struct EventImpact {
    std::string indicator_key;
    double beta = 0.0;
    double tau_rise = 1.0;
    double tau_fade = 1.0;
    bool operator==(const EventImpact&) const = default;
};

struct Event {
    std::string event_id;
    EventCategory category = EventCategory::health_event;
    std::string name;
    std::string catalog_id;
    Day start_day = 0;
    int duration = 1;
    std::vector<EventImpact> impacts;
    int phase_index = 0;

    [[nodiscard]] Day end_day() const { return start_day + duration; }
    [[nodiscard]] double max_tau_fade() const;
    /// Last day on which the kernel can be non-zero.
    [[nodiscard]] double support_end() const { return end_day() + max_tau_fade(); }
    [[nodiscard]] const EventImpact* impact_on(std::string_view key) const;
    bool operator==(const Event&) const = default;
};

// ---------------------------------------------------------------------------
// Device and exams
// ---------------------------------------------------------------------------

/// Per-day decomposition of one indicator update. The four additive parts sum
/// (in this order) to the transform-domain proposal.
struct Decomposition {
    double baseline = 0.0;    ///< mu'_k + s'_k(t)
    double ar_residual = 0.0; ///< phi_k (y_{t-1} - mu'_k - s'_k(t-1))
    double event_raw = 0.0;   ///< u_{k,t}
    double event_delta = 0.0; ///< M_k tanh(u / M_k)
    double noise = 0.0;       ///< epsilon_{k,t}
    double proposal = 0.0;    ///< transform domain
    double proposal_natural = 0.0;
    double value = 0.0; ///< post-projection latent value (natural units)
    bool range_violated = false;
    bool slope_violated = false;
    bool clipped = false;

    bool operator==(const Decomposition&) const = default;
};

struct DeviceDay {
    std::optional<double> value;               ///< observed value, absent when not measured
    std::optional<AbsenceReason> absent_reason; ///< set iff value is absent
    std::optional<Decomposition> log;

    bool operator==(const DeviceDay&) const = default;
};

struct DeviceSeries {
    std::string indicator_key;
    std::vector<DeviceDay> days;

    bool operator==(const DeviceSeries&) const = default;
};

struct ExamResult {
    std::string indicator_key;
    double value = 0.0;
    std::string unit;
    ReferenceRange reference_range;
    ExamStatus status = ExamStatus::normal;

    bool operator==(const ExamResult&) const = default;
};

struct ExamVisit {
    Day visit_day = 0;
    std::vector<ExamResult> results;
    std::string summary;

    [[nodiscard]] const ExamResult* result_for(std::string_view key) const;
    bool operator==(const ExamVisit&) const = default;
};

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

/// Raw counters; rates are derived so breakdowns aggregate exactly.
struct AuditCounts {
    long indicator_days = 0;
    long logged_days = 0;
    long range_violations = 0;
    long slope_violations = 0;
    long clipped = 0;
    long numeric = 0;
    long absent = 0;

    AuditCounts& operator+=(const AuditCounts& o);
    bool operator==(const AuditCounts&) const = default;
};

struct AuditWindow {
    Day start_day = 0;
    Day end_day = 0; ///< exclusive
    AuditCounts counts;
    bool operator==(const AuditWindow&) const = default;
};

struct AuditReport {
    // conformance
    double key_presence_rate = 0.0;
    double unit_presence_rate = 0.0;
    long keyed_records = 0;
    // completeness
    double device_day_coverage = 0.0;
    double indicator_numeric_coverage = 0.0;
    std::map<std::string, long> absence_counts;
    // plausibility
    bool plausibility_available = true;
    double range_violation_rate_pre = 0.0;
    double slope_violation_rate_pre = 0.0;
    double clipping_rate_post = 0.0;
    double exam_device_consistency = 1.0;
    long exam_overlap_checked = 0;
    long exam_overlap_consistent = 0;
    // localization
    AuditCounts totals;
    std::map<std::string, AuditCounts> by_indicator;
    std::vector<AuditWindow> by_window;

    bool operator==(const AuditReport&) const = default;
};

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

enum class KernelMode { continuous, literal };
std::string_view to_string(KernelMode v);

/// Root seed, derivation record and the generation settings a re-simulation needs.
struct SeedRecord {
    std::uint64_t root_seed = 0;
    int user_index = 0;
    std::uint64_t user_seed = 0;
    std::string derivation;
    double absence_rate = 0.0;
    KernelMode kernel_mode = KernelMode::continuous;

    bool operator==(const SeedRecord&) const = default;
};

struct UserBundle {
    Profile profile;
    TrajectoryPlan plan;
    std::vector<IndicatorSpec> indicators;
    std::map<std::string, DeviceSeries> device;
    std::vector<ExamVisit> exams;
    std::vector<Event> events;
    AuditReport audit;
    SeedRecord seeds;

    [[nodiscard]] int horizon() const { return plan.horizon_days; }
    [[nodiscard]] const IndicatorSpec* indicator(std::string_view key) const;
    [[nodiscard]] const Event* event(std::string_view id) const;
    bool operator==(const UserBundle&) const = default;
};

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

struct Evidence {
    std::string entity_id;
    Day from = 0;
    Day to = 0; ///< inclusive
    bool operator==(const Evidence&) const = default;
};

/// Canonical answer. Numeric answers populate `numbers`; string, set and
/// ranked_list answers populate `items`; date answers populate `dates`.
/// ranked_list answers carry the ordering key of each item in `ranking_keys`.
/// When `any_of` is set the truth is a tying set and a single member suffices.
struct GroundTruth {
    AnswerType answer_type = AnswerType::number;
    std::vector<double> numbers;
    std::vector<std::string> items;
    std::vector<std::string> dates;
    std::vector<double> ranking_keys;
    std::string unit;
    AnswerSource source = AnswerSource::derived;
    bool any_of = false;
    std::vector<Evidence> evidence;
    std::vector<std::string> flags;

    bool operator==(const GroundTruth&) const = default;
};

/// Subtype-specific parameter bindings; unused fields stay empty.
struct QueryParams {
    std::string indicator;
    std::string indicator_b;
    std::string event_id;
    std::optional<Day> day;
    std::optional<Day> from;
    std::optional<Day> to;
    std::string direction;
    double threshold = 0.0;

    bool operator==(const QueryParams&) const = default;
};

struct Query {
    std::string query_id;
    Dimension dimension = Dimension::Lookup;
    Tier tier = Tier::Easy;
    std::string subtype;
    QueryParams params;
    std::string text;
    GroundTruth ground_truth;

    bool operator==(const Query&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string type;  ///< e.g. "range", "slope", "status_consistency"
    std::string field; ///< dotted path of the offending field
    std::string locus; ///< indicator and/or day
    bool operator==(const Violation&) const = default;
};

/// Returns every structural invariant violation of @p bundle; empty when valid.
std::vector<Violation> validate_bundle(const UserBundle& bundle);

/// Phase count the template planner targets for a horizon.
int target_phase_count(int horizon_days);

} // namespace hsynth
