#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hsynth/catalog.hpp"
#include "hsynth/config.hpp"
#include "hsynth/model.hpp"
#include "hsynth/planner.hpp"
#include "hsynth/policy.hpp"

namespace hsynth {

/// Everything that distinguishes one user of a cohort before generation.
struct UserSpec {
    int user_index = 0;
    std::uint64_t user_seed = 0;
    int horizon = 0;
    std::string cell; ///< mixture cell name

    bool operator==(const UserSpec&) const = default;
};

/// Largest-remainder apportionment of @p total over @p weights; ties go to
/// the lower index. Counts sum to @p total.
std::vector<int> apportion(int total, const std::vector<double>& weights);

/// "user-0000" style identifier.
std::string user_id_for(int user_index);

/// Runs the per-user synthesis loop and the cohort fan-out.
class Generator {
public:
    Generator(GeneratorConfig config, Catalogs catalogs);

    /// Replace the scripted policy / template planner (e.g. with JSON endpoints).
    /// The factories receive the generator's catalogs, which outlive the plug-ins.
    void set_policy(std::function<std::shared_ptr<const EventPolicy>(const Catalogs&)> factory);
    void set_planner(std::function<std::shared_ptr<const Planner>(const Catalogs&)> factory);

    [[nodiscard]] const GeneratorConfig& config() const { return config_; }
    [[nodiscard]] const Catalogs& catalogs() const { return *catalogs_; }

    /// Two-level quota over strata then cells, shuffled by the root seed.
    [[nodiscard]] std::vector<UserSpec> cohort() const;
    [[nodiscard]] Profile sample_profile(const UserSpec& user) const;
    [[nodiscard]] UserBundle generate_user(const UserSpec& user) const;

    /// Generates every user of cohort(). @p threads = 0 uses the configured
    /// thread count; 1 forces serial execution. Output does not depend on it.
    [[nodiscard]] std::vector<UserBundle> generate_cohort(int threads = 0) const;
    /// Streaming variant; @p sink is called from worker threads, once per user.
    void generate_cohort(int threads, const std::function<void(UserBundle&&)>& sink) const;

private:
    GeneratorConfig config_;
    std::shared_ptr<const Catalogs> catalogs_;
    std::shared_ptr<const EventPolicy> policy_;
    std::shared_ptr<const Planner> planner_;
    std::shared_ptr<const TemplatePlanner> template_planner_;
};

/// Device series for @p bundle's indicators re-simulated over @p events
/// (in log order) using the bundle's seeds, absence rate and kernel mode.
/// Reproduces bundle.device exactly when @p events == bundle.events.
std::map<std::string, DeviceSeries> simulate_device(const UserBundle& bundle, const std::vector<Event>& events);

/// Frozen-history counterfactual: the logged event decisions and noise
/// streams are replayed with @p event_id removed. Throws std::invalid_argument
/// for an unknown event.
std::map<std::string, DeviceSeries> resimulate_without(const UserBundle& bundle, const std::string& event_id);

} // namespace hsynth
