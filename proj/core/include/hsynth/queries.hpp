#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsynth/model.hpp"
#include "hsynth/random.hpp"

namespace hsynth {

/// Parameters are valid but the bundle has no answer for them
/// (e.g. no eligible month). Callers substitute another subtype.
class InfeasibleQuery : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SubtypeInfo {
    std::string name;
    Dimension dimension;
    Tier tier;
    bool fallback = false; ///< device-only substitute
};

/// Every implemented subtype: 15 primary (one per dimension x tier cell, plus
/// the counterfactual Explanation/Hard variant) and the device-only fallbacks.
const std::vector<SubtypeInfo>& subtype_inventory();
const SubtypeInfo& subtype_info(const std::string& name);

/// Deterministic ground truth of @p subtype under @p params. Throws
/// std::invalid_argument when params do not resolve in the bundle and
/// InfeasibleQuery when they resolve but admit no answer.
GroundTruth compute_ground_truth(const UserBundle& bundle, const std::string& subtype, const QueryParams& params);

/// Draws a parameter binding for @p subtype that resolves in the bundle;
/// throws InfeasibleQuery when none can be found.
QueryParams sample_params(const UserBundle& bundle, const std::string& subtype, Stream& stream);

/// Human-readable question for a binding (presentation only).
std::string render_query_text(const UserBundle& bundle, const std::string& subtype, const QueryParams& params);

struct QuerySplit {
    double easy = 0.2;
    double medium = 0.3;
    double hard = 0.5;
};

/// Parses "20/30/50" (any non-negative numbers with a positive sum).
QuerySplit parse_split(const std::string& text);

struct QueryOptions {
    int per_dimension = 20;
    QuerySplit split;
    std::uint64_t seed = 0;
    /// Attempts per subtype before substituting.
    int max_attempts = 24;
};

struct Substitution {
    std::string query_id;
    std::string requested;
    std::string used;
    std::string reason;
};

struct QuerySet {
    std::vector<Query> queries;
    std::vector<Substitution> substitutions;
};

/// Tier counts for one dimension (largest remainder).
std::array<int, 3> tier_counts(int per_dimension, const QuerySplit& split);

QuerySet generate_queries(const UserBundle& bundle, const QueryOptions& options = {});

/// Brute-force re-derivation sharing no helpers with compute_ground_truth.
GroundTruth oracle_ground_truth(const UserBundle& bundle, const std::string& subtype, const QueryParams& params);

/// Answer-level equality: type, items (order-sensitive for ranked lists,
/// set-wise for sets), dates, any_of, and numbers/ranking keys within
/// @p tolerance relative error.
bool equivalent_truth(const GroundTruth& a, const GroundTruth& b, double tolerance = 1e-9);

} // namespace hsynth
