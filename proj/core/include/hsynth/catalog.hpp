#pragma once

#include <map>
#include <string>
#include <vector>

#include "hsynth/model.hpp"
#include "hsynth/planner.hpp"
#include "hsynth/policy.hpp"
#include "hsynth/random.hpp"

namespace hsynth {

/// Population-level indicator definition; personalize() turns it into a
/// per-user IndicatorSpec.
struct IndicatorTemplate {
    IndicatorSpec spec;     ///< population baseline in spec.baseline
    double person_sd = 0.0; ///< between-person sd of the baseline (natural units)
    double age_shift_per_decade = 0.0; ///< applied per decade above 40
    double sex_shift = 0.0; ///< male minus female; half applied each way
    std::map<std::string, double> condition_shift; ///< natural units, additive
};

/// One age/condition cell of the cohort mixture.
struct MixtureCell {
    std::string name;
    AgeStratum stratum = AgeStratum::young;
    std::vector<std::string> conditions;
    double weight = 0.0;
};

struct Catalogs {
    std::vector<IndicatorTemplate> indicators;
    EventCatalog events;
    std::vector<ThemeTemplate> themes;
    std::vector<MixtureCell> mixture;
    std::map<std::string, std::vector<std::string>> medications; ///< condition -> medication codes
};

std::vector<IndicatorTemplate> builtin_indicators();
EventCatalog builtin_events();
std::vector<ThemeTemplate> builtin_themes();
/// Target mixture: 33% 18-44, 44% 45-64, 23% 65+.
std::vector<MixtureCell> builtin_mixture();
std::map<std::string, std::vector<std::string>> builtin_medications();
Catalogs builtin_catalogs();

/// Canonical condition codes known to the built-in catalog.
std::vector<std::string> known_conditions();

/// Checks every table; throws std::invalid_argument on the first inconsistency
/// (unknown indicator in an impact, beta beyond 2 M_k, invalid spec, mixture
/// weights not summing to 1 within 1e-9, ...).
void check_catalogs(const Catalogs& catalogs);

/// Transform-domain distance the state can drift from the baseline level:
/// M_k / (1 - phi_k) + z * stationary noise sd + seasonal swing.
double excursion_margin(const IndicatorSpec& spec, double z = 5.0);

/// Per-user specs: baseline shifted by conditions, age and a truncated
/// between-person draw, then kept inside (L, U) by at least excursion_margin().
std::vector<IndicatorSpec> personalize(const std::vector<IndicatorTemplate>& templates, const Profile& profile,
                                       Stream& stream);

} // namespace hsynth
