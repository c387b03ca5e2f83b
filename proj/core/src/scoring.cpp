#include "hsynth/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hsynth {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string normalize(std::string s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> normalized(const std::vector<std::string>& xs) {
    std::vector<std::string> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(normalize(x));
    return out;
}

std::vector<std::string> sorted_unique(std::vector<std::string> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

template <class E> E enum_field(const json& j, const std::string& field) {
    if (!j.is_string()) throw ResponseParseError(field, "expected a string");
    try {
        return parse_enum<E>(j.get<std::string>());
    } catch (const std::invalid_argument&) {
        throw ResponseParseError(field, "unknown value '" + j.get<std::string>() + "'");
    }
}

bool values_match(const CanonicalAnswer& a, const GroundTruth& t, double eps_abs, double eps_rel) {
    switch (t.answer_type) {
    case AnswerType::number:
        if (a.numbers.size() != t.numbers.size()) return false;
        for (std::size_t i = 0; i < a.numbers.size(); ++i) {
            if (!within_tolerance(a.numbers[i], t.numbers[i], eps_abs, eps_rel)) return false;
        }
        return true;
    case AnswerType::date:
        if (t.any_of) return a.dates.size() == 1 && std::count(t.dates.begin(), t.dates.end(), a.dates[0]) > 0;
        return a.dates == t.dates;
    case AnswerType::string: {
        const auto truth = normalized(t.items);
        const auto ans = normalized(a.items);
        if (t.any_of) return ans.size() == 1 && std::count(truth.begin(), truth.end(), ans[0]) > 0;
        return ans == truth;
    }
    case AnswerType::set: return sorted_unique(normalized(a.items)) == sorted_unique(normalized(t.items));
    case AnswerType::ranked_list: return normalized(a.items) == normalized(t.items);
    }
    return false;
}

} // namespace

CanonicalAnswer parse_response(const std::string& raw) {
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw ResponseParseError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ResponseParseError("$", "expected an object");
    static const std::set<std::string> known{"answer_type", "values", "dates", "unit", "source", "evidence"};
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw ResponseParseError(k, "unknown field");
    }
    if (!j.contains("answer_type")) throw ResponseParseError("answer_type", "missing");
    CanonicalAnswer a;
    a.answer_type = enum_field<AnswerType>(j["answer_type"], "answer_type");

    auto require_array = [&](const char* field) -> const json& {
        if (!j.contains(field)) throw ResponseParseError(field, "missing for answer_type " + std::string(to_string(a.answer_type)));
        if (!j[field].is_array()) throw ResponseParseError(field, "expected an array");
        return j[field];
    };
    auto strings = [&](const json& arr, const char* field) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_string()) throw ResponseParseError(std::string(field) + "[" + std::to_string(i) + "]", "expected a string");
            out.push_back(arr[i].get<std::string>());
        }
        return out;
    };

    switch (a.answer_type) {
    case AnswerType::number: {
        const auto& v = require_array("values");
        if (v.empty()) throw ResponseParseError("values", "empty");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ResponseParseError("values[" + std::to_string(i) + "]", "expected a number");
            a.numbers.push_back(v[i].get<double>());
        }
        break;
    }
    case AnswerType::date: {
        a.dates = strings(require_array("dates"), "dates");
        if (a.dates.empty()) throw ResponseParseError("dates", "empty");
        for (const auto& d : a.dates) {
            try {
                parse_iso_date(d);
            } catch (const std::invalid_argument&) {
                throw ResponseParseError("dates", "not an ISO date: '" + d + "'");
            }
        }
        break;
    }
    case AnswerType::string:
        a.items = strings(require_array("values"), "values");
        if (a.items.size() != 1) throw ResponseParseError("values", "string answers carry exactly one value");
        break;
    case AnswerType::set: {
        a.items = strings(require_array("values"), "values");
        const auto before = a.items.size();
        a.items = sorted_unique(std::move(a.items));
        a.deduplicated = a.items.size() != before;
        break;
    }
    case AnswerType::ranked_list: a.items = strings(require_array("values"), "values"); break;
    }

    if (j.contains("unit") && !j["unit"].is_null()) {
        if (!j["unit"].is_string()) throw ResponseParseError("unit", "expected a string");
        a.unit = j["unit"].get<std::string>();
        a.has_unit = true;
    }
    if (j.contains("source") && !j["source"].is_null()) a.source = enum_field<AnswerSource>(j["source"], "source");
    if (j.contains("evidence")) {
        const auto& ev = j["evidence"];
        if (!ev.is_array()) throw ResponseParseError("evidence", "expected an array");
        for (std::size_t i = 0; i < ev.size(); ++i) {
            const std::string at = "evidence[" + std::to_string(i) + "]";
            const auto& e = ev[i];
            if (!e.is_object() || !e.contains("entity_id") || !e["entity_id"].is_string()) {
                throw ResponseParseError(at, "expected {entity_id, from, to}");
            }
            for (const auto& [k, v] : e.items()) {
                if (k != "entity_id" && k != "from" && k != "to") throw ResponseParseError(at + "." + k, "unknown field");
            }
            Evidence out;
            out.entity_id = e["entity_id"].get<std::string>();
            if (e.contains("from")) {
                if (!e["from"].is_number_integer()) throw ResponseParseError(at + ".from", "expected an integer");
                out.from = e["from"].get<int>();
            }
            if (e.contains("to")) {
                if (!e["to"].is_number_integer()) throw ResponseParseError(at + ".to", "expected an integer");
                out.to = e["to"].get<int>();
            }
            a.evidence.push_back(std::move(out));
        }
    }
    return a;
}

bool within_tolerance(double answer, double truth, double eps_abs, double eps_rel) {
    if (!std::isfinite(answer)) return false;
    return std::abs(answer - truth) <= std::max(eps_abs, eps_rel * std::abs(truth));
}

bool stage1_gate(const CanonicalAnswer& answer, const GroundTruth& truth, double eps_abs, double eps_rel) {
    if (answer.answer_type != truth.answer_type) return false;
    return values_match(answer, truth, eps_abs, eps_rel);
}

JudgeResult FallbackJudge::score(const JudgeRequest& r) const {
    JudgeResult out;
    if (!r.answer || !r.truth || !stage1_gate(*r.answer, *r.truth)) {
        out.justification = "values do not match";
        return out;
    }
    const bool unit_ok = r.truth->unit.empty() ? (!r.answer->has_unit || r.answer->unit.empty())
                                               : (r.answer->has_unit && r.answer->unit == r.truth->unit);
    const bool source_ok = r.answer->source && *r.answer->source == r.truth->source;
    if (unit_ok && source_ok) {
        out.score = 2.0;
        out.justification = "values, unit and source match";
    } else {
        out.score = 1.0;
        out.justification = std::string("values match; ") + (unit_ok ? "" : "unit missing or wrong; ") +
                            (source_ok ? "" : "source missing or wrong");
    }
    return out;
}

JudgeResult JsonJudge::score(const JudgeRequest& r) const {
    try {
        ojson req{{"query_id", r.query_id},
                  {"query", r.query_text},
                  {"dimension", std::string(to_string(r.dimension))},
                  {"rubric_aspects", r.aspects},
                  {"response", json::parse(r.response_json)}};
        const json resp = json::parse(transport_(req.dump()));
        if (!resp.is_object() || !resp.contains("score") || !resp["score"].is_number()) {
            throw std::runtime_error("judge response lacks a numeric score");
        }
        JudgeResult out;
        out.score = std::clamp(resp["score"].get<double>(), 0.0, 2.0);
        if (resp.contains("justification") && resp["justification"].is_string()) {
            out.justification = resp["justification"].get<std::string>();
        }
        return out;
    } catch (const std::exception& e) {
        JudgeResult out = fallback_.score(r);
        out.fell_back = true;
        out.justification = "external judge failed (" + std::string(e.what()) + "); " + out.justification;
        return out;
    }
}

std::vector<std::string> rubric_aspects(Dimension d) {
    switch (d) {
    case Dimension::Lookup: return {"correct value", "unit", "source attribution"};
    case Dimension::Trend: return {"correct period", "direction of change", "window stated"};
    case Dimension::Comparison: return {"correct comparison", "windows stated", "unit"};
    case Dimension::Anomaly: return {"correct findings", "reference range cited", "exam or device source"};
    case Dimension::Explanation: return {"baseline clarity", "evidence ordering rationale", "non-causal language"};
    }
    return {};
}

double final_score(bool gate, double rubric) { return gate ? std::clamp(rubric, 0.0, 2.0) / 2.0 : 0.0; }

QueryScore score_query(const Query& q, const std::string* raw, const RubricJudge& judge) {
    QueryScore s;
    s.query_id = q.query_id;
    s.dimension = q.dimension;
    s.tier = q.tier;
    if (!raw) {
        s.error = "missing response";
        return s;
    }
    s.answered = true;
    CanonicalAnswer a;
    try {
        a = parse_response(*raw);
    } catch (const ResponseParseError& e) {
        s.error = e.what();
        return s;
    }
    s.parsed = true;
    s.gate = stage1_gate(a, q.ground_truth);
    if (!s.gate) return s;
    JudgeRequest req{q.query_id, q.text, q.dimension, rubric_aspects(q.dimension), *raw, &a, &q.ground_truth};
    const JudgeResult r = judge.score(req);
    s.rubric = r.score;
    s.judge_fell_back = r.fell_back;
    s.score = final_score(s.gate, s.rubric);
    return s;
}

ScoreReport score_all(const std::vector<Query>& queries, const std::map<std::string, std::string>& responses,
                      const RubricJudge& judge) {
    ScoreReport rep;
    std::set<std::string> ids;
    for (const auto& q : queries) {
        ids.insert(q.query_id);
        auto it = responses.find(q.query_id);
        QueryScore s = score_query(q, it == responses.end() ? nullptr : &it->second, judge);
        if (!s.answered) rep.missing.push_back(q.query_id);
        if (s.judge_fell_back) ++rep.judge_fallbacks;
        for (Tally* t : {&rep.by_dimension[s.dimension], &rep.by_tier[s.tier], &rep.by_cell[{s.dimension, s.tier}],
                         &rep.total}) {
            ++t->count;
            t->sum += s.score;
        }
        rep.scores.push_back(std::move(s));
    }
    for (const auto& [id, raw] : responses) {
        if (!ids.count(id)) rep.unmatched.push_back(id);
    }
    return rep;
}

std::map<std::string, std::string> parse_responses_file(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ResponseParseError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ResponseParseError("$", "expected an object mapping query_id to an answer");
    std::map<std::string, std::string> out;
    for (const auto& [id, v] : j.items()) out[id] = v.dump();
    return out;
}

std::string report_to_json(const ScoreReport& r) {
    auto tally = [](const Tally& t) { return ojson{{"count", t.count}, {"sum", t.sum}, {"accuracy", t.accuracy()}}; };
    ojson dims = ojson::object(), tiers = ojson::object(), cells = ojson::array(), per = ojson::array();
    for (const auto& [d, t] : r.by_dimension) dims[std::string(to_string(d))] = tally(t);
    for (const auto& [t, x] : r.by_tier) tiers[std::string(to_string(t))] = tally(x);
    for (const auto& [k, t] : r.by_cell) {
        ojson c = tally(t);
        c["dimension"] = std::string(to_string(k.first));
        c["tier"] = std::string(to_string(k.second));
        cells.push_back(c);
    }
    for (const auto& s : r.scores) {
        ojson q{{"query_id", s.query_id},
                {"dimension", std::string(to_string(s.dimension))},
                {"tier", std::string(to_string(s.tier))},
                {"gate", s.gate},
                {"rubric", s.rubric},
                {"score", s.score}};
        if (!s.error.empty()) q["error"] = s.error;
        if (s.judge_fell_back) q["judge_fallback"] = true;
        per.push_back(q);
    }
    ojson j{{"total", tally(r.total)},
            {"by_dimension", dims},
            {"by_tier", tiers},
            {"by_cell", cells},
            {"missing", r.missing},
            {"unmatched", r.unmatched},
            {"judge_fallbacks", r.judge_fallbacks},
            {"queries", per}};
    return j.dump(2) + "\n";
}

std::string render_report(const ScoreReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << std::left << std::setw(14) << "Dimension";
    for (Tier t : kAllTiers) os << std::right << std::setw(9) << to_string(t);
    os << std::right << std::setw(9) << "All" << '\n';
    for (Dimension d : kAllDimensions) {
        os << std::left << std::setw(14) << to_string(d);
        for (Tier t : kAllTiers) {
            auto it = r.by_cell.find({d, t});
            os << std::right << std::setw(9);
            if (it == r.by_cell.end()) os << "-";
            else os << it->second.accuracy();
        }
        auto it = r.by_dimension.find(d);
        os << std::right << std::setw(9);
        if (it == r.by_dimension.end()) os << "-";
        else os << it->second.accuracy();
        os << '\n';
    }
    os << std::left << std::setw(14) << "All";
    for (Tier t : kAllTiers) {
        auto it = r.by_tier.find(t);
        os << std::right << std::setw(9);
        if (it == r.by_tier.end()) os << "-";
        else os << it->second.accuracy();
    }
    os << std::right << std::setw(9) << r.total.accuracy() << '\n';
    os << "Total: " << r.total.accuracy() << "% over " << r.total.count << " queries";
    if (!r.missing.empty()) os << " (" << r.missing.size() << " without a response)";
    os << '\n';
    if (r.judge_fallbacks > 0) os << "External judge unavailable for " << r.judge_fallbacks << " queries; fallback used\n";
    return os.str();
}

std::string truth_as_response(const GroundTruth& t) {
    ojson j{{"answer_type", std::string(to_string(t.answer_type))}};
    switch (t.answer_type) {
    case AnswerType::number: j["values"] = t.numbers; break;
    case AnswerType::date: j["dates"] = t.any_of ? std::vector<std::string>{t.dates.front()} : t.dates; break;
    case AnswerType::string:
        j["values"] = std::vector<std::string>{t.items.empty() ? std::string() : t.items.front()};
        break;
    case AnswerType::set:
    case AnswerType::ranked_list: j["values"] = t.items; break;
    }
    j["unit"] = t.unit;
    j["source"] = std::string(to_string(t.source));
    return j.dump();
}

} // namespace hsynth
