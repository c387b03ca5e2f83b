#pragma once

#include <string>
#include <vector>

#include "hsynth/model.hpp"

namespace hsynth {

inline constexpr int kAuditWindowDays = 90;
/// Exam-device agreement bound in units of the anchoring perturbation sd.
inline constexpr double kConsistencySigmas = 4.0;

/// Conformance, completeness and plausibility metrics of one bundle. Pure;
/// does not read bundle.audit. Days without a decomposition log mark the
/// plausibility section unavailable instead of failing.
AuditReport audit_bundle(const UserBundle& bundle);

/// Mean of each rate across users (the cohort table layout).
struct CohortAudit {
    int users = 0;
    double key_presence_rate = 0.0;
    double unit_presence_rate = 0.0;
    double device_day_coverage = 0.0;
    double indicator_numeric_coverage = 0.0;
    double range_violation_rate_pre = 0.0;
    double slope_violation_rate_pre = 0.0;
    double clipping_rate_post = 0.0;
    double exam_device_consistency = 0.0;
    int plausibility_unavailable = 0; ///< users excluded from the plausibility means
};

CohortAudit aggregate_audits(const std::vector<AuditReport>& reports);
std::string render_audit_table(const CohortAudit& cohort);
std::string cohort_audit_to_json(const CohortAudit& cohort);

} // namespace hsynth
