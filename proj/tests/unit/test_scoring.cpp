#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hsynth/queries.hpp"
#include "hsynth/scoring.hpp"

using namespace hsynth;
using hsynth::fixtures::small_cohort;

namespace {

GroundTruth number_truth(double v, std::string unit = "/min") {
    GroundTruth g;
    g.answer_type = AnswerType::number;
    g.numbers = {v};
    g.unit = std::move(unit);
    g.source = AnswerSource::device;
    return g;
}

Query make_query(std::string id, Dimension d, Tier t, GroundTruth g) {
    Query q;
    q.query_id = std::move(id);
    q.dimension = d;
    q.tier = t;
    q.ground_truth = std::move(g);
    return q;
}

bool gate_on(const std::string& raw, const GroundTruth& g) { return stage1_gate(parse_response(raw), g); }

} // namespace

TEST(Tolerance, AbsoluteAndRelativeFloors) {
    EXPECT_TRUE(within_tolerance(0.009, 0.0));
    EXPECT_FALSE(within_tolerance(0.011, 0.0));
    EXPECT_TRUE(within_tolerance(101.0, 100.0));
    EXPECT_FALSE(within_tolerance(101.01, 100.0));
    EXPECT_TRUE(within_tolerance(-99.0, -100.0));
    EXPECT_FALSE(within_tolerance(std::nan(""), 1.0));
}

TEST(Parse, AcceptsCanonicalAnswers) {
    const auto a = parse_response(
        R"({"answer_type":"number","values":[72.5],"unit":"/min","source":"device","evidence":[{"entity_id":"hr","from":3,"to":9}]})");
    EXPECT_EQ(a.answer_type, AnswerType::number);
    EXPECT_EQ(a.numbers, (std::vector<double>{72.5}));
    EXPECT_TRUE(a.has_unit);
    EXPECT_EQ(a.source, AnswerSource::device);
    ASSERT_EQ(a.evidence.size(), 1u);
    EXPECT_EQ(a.evidence.front().to, 9);

    const auto s = parse_response(R"({"answer_type":"set","values":["b","a","b"]})");
    EXPECT_TRUE(s.deduplicated);
    EXPECT_EQ(s.items.size(), 2u);
}

TEST(Parse, RejectsMalformedAnswers) {
    auto field_of = [](const std::string& raw) {
        try {
            parse_response(raw);
        } catch (const ResponseParseError& e) {
            return e.field();
        }
        return std::string("<accepted>");
    };
    EXPECT_EQ(field_of(R"({"answer_type":"number"})"), "values");
    EXPECT_EQ(field_of(R"({"answer_type":"number","values":["x"]})"), "values[0]");
    EXPECT_EQ(field_of(R"({"answer_type":"string","values":["a","b"]})"), "values");
    EXPECT_EQ(field_of(R"({"answer_type":"date","dates":["2022-13-01"]})"), "dates");
    EXPECT_EQ(field_of(R"({"answer_type":"number","values":[1],"confidence":0.9})"), "confidence");
    EXPECT_EQ(field_of(R"({"answer_type":"guess","values":[1]})"), "answer_type");
    EXPECT_EQ(field_of("not json"), "$");
}

TEST(Gate, MatchesPerAnswerType) {
    EXPECT_TRUE(gate_on(R"({"answer_type":"number","values":[72.6]})", number_truth(72.0)));
    EXPECT_FALSE(gate_on(R"({"answer_type":"number","values":[73.0]})", number_truth(72.0)));
    EXPECT_FALSE(gate_on(R"({"answer_type":"string","values":["72"]})", number_truth(72.0)));

    GroundTruth yes;
    yes.answer_type = AnswerType::string;
    yes.items = {"yes"};
    EXPECT_TRUE(gate_on(R"({"answer_type":"string","values":[" Yes "]})", yes));

    GroundTruth tie = yes;
    tie.items = {"2022-03", "2022-04"};
    tie.any_of = true;
    EXPECT_TRUE(gate_on(R"({"answer_type":"string","values":["2022-04"]})", tie));
    EXPECT_FALSE(gate_on(R"({"answer_type":"string","values":["2022-05"]})", tie));

    GroundTruth set;
    set.answer_type = AnswerType::set;
    set.items = {"evt-0001", "evt-0002"};
    EXPECT_TRUE(gate_on(R"({"answer_type":"set","values":["evt-0002","evt-0001"]})", set));
    EXPECT_FALSE(gate_on(R"({"answer_type":"set","values":["evt-0002"]})", set));

    GroundTruth ranked = set;
    ranked.answer_type = AnswerType::ranked_list;
    EXPECT_TRUE(gate_on(R"({"answer_type":"ranked_list","values":["evt-0001","evt-0002"]})", ranked));
    EXPECT_FALSE(gate_on(R"({"answer_type":"ranked_list","values":["evt-0002","evt-0001"]})", ranked));

    GroundTruth date;
    date.answer_type = AnswerType::date;
    date.dates = {"2022-01-31"};
    EXPECT_TRUE(gate_on(R"({"answer_type":"date","dates":["2022-01-31"]})", date));
    EXPECT_FALSE(gate_on(R"({"answer_type":"date","dates":["2022-02-01"]})", date));
}

TEST(Judge, FallbackRubricLevels) {
    const FallbackJudge judge;
    const auto q = make_query("u-q001", Dimension::Lookup, Tier::Easy, number_truth(72.0));
    auto score = [&](const std::string& raw) { return score_query(q, &raw, judge); };
    EXPECT_DOUBLE_EQ(score(R"({"answer_type":"number","values":[72],"unit":"/min","source":"device"})").score, 1.0);
    EXPECT_DOUBLE_EQ(score(R"({"answer_type":"number","values":[72],"source":"device"})").score, 0.5);
    EXPECT_DOUBLE_EQ(score(R"({"answer_type":"number","values":[72],"unit":"/min","source":"exam"})").score, 0.5);
    EXPECT_DOUBLE_EQ(score(R"({"answer_type":"number","values":[80],"unit":"/min","source":"device"})").score, 0.0);
    const auto bad = score(R"({"answer_type":"number"})");
    EXPECT_FALSE(bad.parsed);
    EXPECT_FALSE(bad.error.empty());
}

TEST(Judge, ExternalJudgeAndFallback) {
    const auto q = make_query("u-q001", Dimension::Explanation, Tier::Hard, number_truth(72.0));
    const std::string raw = R"({"answer_type":"number","values":[72],"unit":"/min","source":"device"})";
    std::string seen;
    const JsonJudge remote([&](const std::string& body) {
        seen = body;
        return std::string(R"({"score": 1, "justification": "ok"})");
    });
    const auto s = score_query(q, &raw, remote);
    EXPECT_DOUBLE_EQ(s.score, 0.5);
    EXPECT_FALSE(s.judge_fell_back);
    EXPECT_NE(seen.find("non-causal language"), std::string::npos);

    const JsonJudge broken([](const std::string&) -> std::string { throw std::runtime_error("connection refused"); });
    const auto f = score_query(q, &raw, broken);
    EXPECT_TRUE(f.judge_fell_back);
    EXPECT_DOUBLE_EQ(f.score, 1.0);

    const JsonJudge garbage([](const std::string&) { return std::string("{\"verdict\": \"good\"}"); });
    EXPECT_TRUE(score_query(q, &raw, garbage).judge_fell_back);
    EXPECT_DOUBLE_EQ(final_score(false, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(final_score(true, 5.0), 1.0);
}

TEST(Report, AggregatesRecombine) {
    QueryOptions opt;
    opt.per_dimension = 10;
    const auto queries = generate_queries(small_cohort().front(), opt).queries;
    std::map<std::string, std::string> responses;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (i % 3 != 0) responses[queries[i].query_id] = truth_as_response(queries[i].ground_truth);
    }
    responses["stranger-q001"] = truth_as_response(queries.front().ground_truth);
    const auto rep = score_all(queries, responses, FallbackJudge{});
    EXPECT_EQ(rep.total.count, 50);
    EXPECT_EQ(rep.missing.size(), 17u);
    EXPECT_EQ(rep.unmatched, (std::vector<std::string>{"stranger-q001"}));
    EXPECT_NEAR(rep.total.accuracy(), 100.0 * 33 / 50, 1e-9);

    double dim_sum = 0, tier_sum = 0, cell_sum = 0;
    int dim_n = 0;
    for (const auto& [d, t] : rep.by_dimension) {
        dim_sum += t.sum;
        dim_n += t.count;
    }
    for (const auto& [k, t] : rep.by_tier) tier_sum += t.sum;
    for (const auto& [k, t] : rep.by_cell) cell_sum += t.sum;
    EXPECT_EQ(dim_n, 50);
    EXPECT_DOUBLE_EQ(dim_sum, rep.total.sum);
    EXPECT_DOUBLE_EQ(tier_sum, rep.total.sum);
    EXPECT_DOUBLE_EQ(cell_sum, rep.total.sum);
    EXPECT_NE(render_report(rep).find("66.0"), std::string::npos);
}

TEST(Report, ResponsesFile) {
    const auto r = parse_responses_file(R"({"a-q001": {"answer_type":"number","values":[1]}})");
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NO_THROW(parse_response(r.at("a-q001")));
    EXPECT_THROW(parse_responses_file("[]"), ResponseParseError);
}
