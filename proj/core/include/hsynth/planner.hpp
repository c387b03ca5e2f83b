#pragma once

#include <string>
#include <vector>

#include "hsynth/model.hpp"
#include "hsynth/policy.hpp"
#include "hsynth/random.hpp"

namespace hsynth {

enum class Audience { chronic, healthy, any };

/// A phase theme. Its tag is the same vocabulary as CatalogEntry::affinity.
struct ThemeTemplate {
    std::string tag;
    std::string name;
    Audience audience = Audience::any;
    std::vector<std::string> contradicts;
};

class Planner {
public:
    virtual ~Planner() = default;
    /// Requires horizon >= 180; throws std::invalid_argument otherwise.
    virtual TrajectoryPlan plan(const Profile& profile, int horizon, const std::string& epoch,
                                Stream& stream) const = 0;
};

/// Deterministic template planner: round(horizon / 106) phases clamped to
/// [4, 20], boundaries jittered by up to 15 days, every phase >= 30 days.
class TemplatePlanner final : public Planner {
public:
    explicit TemplatePlanner(std::vector<ThemeTemplate> themes);
    TrajectoryPlan plan(const Profile& profile, int horizon, const std::string& epoch,
                        Stream& stream) const override;
    [[nodiscard]] const std::vector<ThemeTemplate>& themes() const { return themes_; }

private:
    std::vector<ThemeTemplate> themes_;
};

/// External planner: JSON request {profile, horizon, epoch}, JSON reply
/// {overall_theme, phases:[{name, start_day, end_day, theme_tag}]}.
/// Transport or schema failures fall back to the template planner.
class JsonPlanner final : public Planner {
public:
    JsonPlanner(JsonTransport transport, const TemplatePlanner& fallback);
    TrajectoryPlan plan(const Profile& profile, int horizon, const std::string& epoch,
                        Stream& stream) const override;

private:
    JsonTransport transport_;
    const TemplatePlanner* fallback_;
};

/// Phase covering @p day (half-open intervals; a boundary day belongs to the
/// later phase). Throws std::out_of_range outside [0, horizon).
const Phase& phase_at(const TrajectoryPlan& plan, Day day);

/// Contradicted tags of the theme with @p tag (empty if unknown).
std::vector<std::string> contradicted_tags(const std::vector<ThemeTemplate>& themes, const std::string& tag);

/// Throws std::invalid_argument unless phases tile [0, horizon) with each >= 30 days.
void check_plan(const TrajectoryPlan& plan);

} // namespace hsynth
