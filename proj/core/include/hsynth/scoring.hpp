#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsynth/model.hpp"

namespace hsynth {

/// A response that does not fit the canonical schema.
class ResponseParseError : public std::invalid_argument {
public:
    ResponseParseError(std::string field, const std::string& detail)
        : std::invalid_argument(field + ": " + detail), field_(std::move(field)) {}
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Agent answer in the canonical schema:
/// {"answer_type", "values", "dates", "unit", "source", "evidence"}.
/// `values` holds numbers for number answers and strings for string, set and
/// ranked_list answers; date answers use `dates`.
struct CanonicalAnswer {
    AnswerType answer_type = AnswerType::number;
    std::vector<double> numbers;
    std::vector<std::string> items;
    std::vector<std::string> dates;
    std::string unit;
    bool has_unit = false;
    std::optional<AnswerSource> source;
    std::vector<Evidence> evidence;
    bool deduplicated = false; ///< set answer contained repeated members
};

CanonicalAnswer parse_response(const std::string& raw);

inline constexpr double kEpsAbs = 0.01;
inline constexpr double kEpsRel = 0.01;

/// |a - v| <= max(eps_abs, eps_rel |v|).
bool within_tolerance(double answer, double truth, double eps_abs = kEpsAbs, double eps_rel = kEpsRel);

/// Programmatic correctness check. Answer-type mismatch fails.
bool stage1_gate(const CanonicalAnswer& answer, const GroundTruth& truth, double eps_abs = kEpsAbs,
                 double eps_rel = kEpsRel);

struct JudgeRequest {
    std::string query_id;
    std::string query_text;
    Dimension dimension = Dimension::Lookup;
    std::vector<std::string> aspects;
    std::string response_json;
    const CanonicalAnswer* answer = nullptr;
    const GroundTruth* truth = nullptr;
};

struct JudgeResult {
    double score = 0.0; ///< in [0, 2]
    std::string justification;
    bool fell_back = false;
};

class RubricJudge {
public:
    virtual ~RubricJudge() = default;
    virtual JudgeResult score(const JudgeRequest& request) const = 0;
};

/// Canonical-field fidelity: 2 on full match including unit and source, 1 when
/// the values match but unit or source is missing or wrong, 0 otherwise.
class FallbackJudge : public RubricJudge {
public:
    JudgeResult score(const JudgeRequest& request) const override;
};

/// Posts {"query_id", "query", "dimension", "rubric_aspects", "response"} and
/// expects {"score", "justification"}. Any transport or schema failure falls
/// back to FallbackJudge with fell_back set.
class JsonJudge : public RubricJudge {
public:
    using Transport = std::function<std::string(const std::string& request_body)>;
    explicit JsonJudge(Transport transport) : transport_(std::move(transport)) {}
    JudgeResult score(const JudgeRequest& request) const override;

private:
    Transport transport_;
    FallbackJudge fallback_;
};

/// Rubric aspects sent to external judges for a dimension.
std::vector<std::string> rubric_aspects(Dimension d);

/// gate x rubric / 2, with the rubric clamped to [0, 2].
double final_score(bool gate, double rubric);

struct QueryScore {
    std::string query_id;
    Dimension dimension = Dimension::Lookup;
    Tier tier = Tier::Easy;
    bool answered = false;
    bool parsed = false;
    bool gate = false;
    double rubric = 0.0;
    double score = 0.0;
    bool judge_fell_back = false;
    std::string error;
};

struct Tally {
    int count = 0;
    double sum = 0.0;
    /// Percentage, per-query average.
    [[nodiscard]] double accuracy() const { return count == 0 ? 0.0 : 100.0 * sum / count; }
};

struct ScoreReport {
    std::vector<QueryScore> scores;
    std::map<Dimension, Tally> by_dimension;
    std::map<Tier, Tally> by_tier;
    std::map<std::pair<Dimension, Tier>, Tally> by_cell;
    Tally total;
    std::vector<std::string> missing;  ///< query ids without a response
    std::vector<std::string> unmatched; ///< response ids without a query
    int judge_fallbacks = 0;
};

/// Scores one raw response (nullptr = missing).
QueryScore score_query(const Query& query, const std::string* raw_response, const RubricJudge& judge);

/// @p responses maps query_id to the raw JSON text of its canonical answer.
ScoreReport score_all(const std::vector<Query>& queries, const std::map<std::string, std::string>& responses,
                      const RubricJudge& judge);

/// Parses a responses file: a JSON object mapping query_id to canonical answer.
/// Throws ResponseParseError when the file itself is malformed.
std::map<std::string, std::string> parse_responses_file(const std::string& text);

std::string report_to_json(const ScoreReport& report);
std::string render_report(const ScoreReport& report);

/// The response that reproduces @p truth exactly (handy for tests and examples).
std::string truth_as_response(const GroundTruth& truth);

} // namespace hsynth
