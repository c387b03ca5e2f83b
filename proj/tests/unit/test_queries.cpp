#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "hsynth/queries.hpp"

using namespace hsynth;
using hsynth::fixtures::linear_bundle;
using hsynth::fixtures::small_cohort;

namespace {

QueryParams window(std::string indicator, Day from, Day to, std::string direction = {}) {
    QueryParams p;
    p.indicator = std::move(indicator);
    p.from = from;
    p.to = to;
    p.direction = std::move(direction);
    return p;
}

QueryParams on_event(std::string indicator, std::string event_id) {
    QueryParams p;
    p.indicator = std::move(indicator);
    p.event_id = std::move(event_id);
    return p;
}

GroundTruth truth_of(const std::string& subtype, const QueryParams& p) {
    static const UserBundle b = linear_bundle();
    return compute_ground_truth(b, subtype, p);
}

double number_of(const std::string& subtype, const QueryParams& p) {
    const auto g = truth_of(subtype, p);
    EXPECT_EQ(g.answer_type, AnswerType::number) << subtype;
    EXPECT_EQ(g.numbers.size(), 1u) << subtype;
    return g.numbers.empty() ? 0.0 : g.numbers.front();
}

std::vector<std::string> items_of(const std::string& subtype, const QueryParams& p) { return truth_of(subtype, p).items; }

} // namespace

TEST(Inventory, CoversEveryCell) {
    std::set<std::pair<Dimension, Tier>> primary, fallback;
    for (const auto& s : subtype_inventory()) (s.fallback ? fallback : primary).insert({s.dimension, s.tier});
    EXPECT_EQ(primary.size(), 15u);
    // trend questions only read device series, so they never need a substitute
    for (Dimension d : {Dimension::Lookup, Dimension::Comparison, Dimension::Anomaly, Dimension::Explanation}) {
        bool has = false;
        for (Tier t : kAllTiers) has |= fallback.count({d, t}) > 0;
        EXPECT_TRUE(has) << to_string(d);
    }
    EXPECT_THROW(subtype_info("no_such_subtype"), std::invalid_argument);
}

TEST(LinearBundle, Lookup) {
    QueryParams p;
    p.indicator = "steps";
    p.day = 10;
    EXPECT_DOUBLE_EQ(number_of("device_value_on_date", p), 10.0);
    EXPECT_EQ(truth_of("device_value_on_date", p).unit, "/d");
    EXPECT_EQ(items_of("event_indicator_mapping", on_event("", "evt-A")), (std::vector<std::string>{"hr", "steps"}));
    const auto rich = truth_of("most_indicator_rich_event", window("", 0, 119));
    EXPECT_TRUE(rich.any_of);
    EXPECT_EQ(rich.items, (std::vector<std::string>{"evt-A", "evt-C"}));
    EXPECT_EQ(items_of("most_indicator_rich_event", window("", 55, 119)), (std::vector<std::string>{"evt-C"}));
}

TEST(LinearBundle, Trend) {
    EXPECT_EQ(items_of("best_worst_month", window("steps", 0, 119, "highest")), (std::vector<std::string>{"2022-04"}));
    EXPECT_EQ(items_of("best_worst_month", window("steps", 0, 119, "lowest")), (std::vector<std::string>{"2022-01"}));
    // monthly means 14, 42.5, 72, 102.5; May has too few days
    EXPECT_EQ(items_of("largest_month_change", window("steps", 0, 119)), (std::vector<std::string>{"2022-04"}));
    EXPECT_EQ(truth_of("regime_change", window("steps", 0, 119)).dates, (std::vector<std::string>{"2022-01-31"}));
    EXPECT_EQ(items_of("regime_change", window("hr", 0, 119)), (std::vector<std::string>{"none"}));
    EXPECT_THROW(truth_of("regime_change", window("steps", 0, 50)), std::invalid_argument);
}

TEST(LinearBundle, Comparison) {
    EXPECT_DOUBLE_EQ(number_of("pre_post_event", on_event("steps", "evt-A")), 14.0);
    EXPECT_DOUBLE_EQ(number_of("during_event_ratio", on_event("steps", "evt-A")), 0.545);
    EXPECT_DOUBLE_EQ(number_of("during_event_ratio", on_event("hr", "evt-B")), 1.0);
    auto p = window("", 0, 119);
    p.event_id = "evt-A";
    EXPECT_EQ(items_of("shared_indicator_events", p), (std::vector<std::string>{"evt-B", "evt-C"}));
    p.from = 70;
    EXPECT_EQ(items_of("shared_indicator_events", p), (std::vector<std::string>{"evt-C"}));
    EXPECT_THROW(truth_of("pre_post_event", on_event("steps", "evt-Z")), std::invalid_argument);
}

TEST(LinearBundle, Anomaly) {
    QueryParams p;
    p.indicator = "hba1c";
    EXPECT_EQ(items_of("ever_abnormal", p), (std::vector<std::string>{"yes"}));
    EXPECT_EQ(truth_of("ever_abnormal", p).source, AnswerSource::exam);
    EXPECT_EQ(items_of("abnormal_deterioration", window("", 30, 90)), (std::vector<std::string>{"hba1c"}));
    EXPECT_EQ(items_of("abnormal_clusters", window("", 30, 90)), (std::vector<std::string>{"hba1c+ldl"}));
    EXPECT_TRUE(items_of("abnormal_clusters", window("", 30, 60)).empty());
    EXPECT_THROW(truth_of("abnormal_deterioration", window("", 30, 45)), std::invalid_argument);
    EXPECT_THROW(truth_of("abnormal_clusters", window("", 0, 40)), InfeasibleQuery);
}

TEST(LinearBundle, Fallbacks) {
    EXPECT_DOUBLE_EQ(number_of("window_extreme_value", window("steps", 5, 40, "highest")), 40.0);
    EXPECT_EQ(truth_of("window_extreme_date", window("steps", 5, 40, "lowest")).dates,
              (std::vector<std::string>{"2022-01-08"}));
    EXPECT_DOUBLE_EQ(number_of("window_mean_difference", window("steps", 10, 37)), 14.0);
    EXPECT_DOUBLE_EQ(number_of("window_baseline_ratio", window("steps", 0, 9)), 0.045);
    EXPECT_EQ(items_of("device_out_of_reference", window("steps", 0, 119)), (std::vector<std::string>{"yes"}));
    EXPECT_EQ(items_of("device_out_of_reference", window("steps", 20, 80)), (std::vector<std::string>{"no"}));
    EXPECT_DOUBLE_EQ(number_of("device_out_of_range_days", window("steps", 0, 119)), 59.0);
    EXPECT_DOUBLE_EQ(number_of("longest_out_of_range_run", window("steps", 0, 119)), 39.0);
    EXPECT_DOUBLE_EQ(number_of("days_above_2sigma_count", window("steps", 0, 119)), 0.0);
    EXPECT_EQ(items_of("weekday_peak", window("steps", 0, 55)), (std::vector<std::string>{"Sunday"}));
    EXPECT_EQ(truth_of("largest_deviation_day", window("steps", 0, 119)).dates, (std::vector<std::string>{"2022-01-03"}));
    EXPECT_THROW(truth_of("device_out_of_range_days", window("hr", 0, 119)), std::invalid_argument);
}

TEST(LinearBundle, AttributionRankings) {
    // shares of the capped drive; the cap (50) is far above every drive here
    const auto r = truth_of("event_impact_ranking", window("hr", 45, 80));
    ASSERT_EQ(r.answer_type, AnswerType::ranked_list);
    ASSERT_EQ(r.items.size(), 2u);
    EXPECT_EQ(r.items[0], "evt-A");
    EXPECT_GE(r.ranking_keys[0], r.ranking_keys[1]);
    EXPECT_THROW(truth_of("event_impact_ranking", window("hr", 0, 40)), InfeasibleQuery);
}

TEST(Split, ParsingAndCounts) {
    const auto s = parse_split("100/0/0");
    EXPECT_DOUBLE_EQ(s.easy, 1.0);
    EXPECT_DOUBLE_EQ(s.hard, 0.0);
    EXPECT_THROW(parse_split("0/0/0"), std::invalid_argument);
    EXPECT_THROW(parse_split("50/50"), std::invalid_argument);
    EXPECT_THROW(parse_split("a/b/c"), std::invalid_argument);
    EXPECT_EQ(tier_counts(20, {}), (std::array<int, 3>{4, 6, 10}));
    EXPECT_EQ(tier_counts(20, parse_split("100/0/0")), (std::array<int, 3>{20, 0, 0}));
    EXPECT_EQ(tier_counts(7, {}), (std::array<int, 3>{1, 2, 4}));
}

TEST(Generation, CountsIdsAndDeterminism) {
    const auto& b = small_cohort().front();
    QueryOptions opt;
    opt.per_dimension = 10;
    opt.seed = 5;
    const auto set = generate_queries(b, opt);
    ASSERT_EQ(set.queries.size(), 50u);
    std::map<Dimension, std::array<int, 3>> cells;
    std::set<std::string> ids, texts;
    for (const auto& q : set.queries) {
        ++cells[q.dimension][static_cast<std::size_t>(q.tier)];
        ids.insert(q.query_id);
        texts.insert(q.text);
        EXPECT_EQ(q.query_id.rfind(b.profile.user_id + "-q", 0), 0u);
    }
    for (const auto& [d, c] : cells) EXPECT_EQ(c, (std::array<int, 3>{2, 3, 5})) << to_string(d);
    EXPECT_EQ(ids.size(), 50u);
    EXPECT_EQ(texts.size(), 50u);
    EXPECT_EQ(generate_queries(b, opt).queries, set.queries);
    opt.seed = 6;
    EXPECT_NE(generate_queries(b, opt).queries, set.queries);
}

TEST(Generation, TruthIsReproducibleFromParams) {
    for (const auto& b : small_cohort()) {
        QueryOptions opt;
        opt.per_dimension = 6;
        for (const auto& q : generate_queries(b, opt).queries) {
            EXPECT_EQ(compute_ground_truth(b, q.subtype, q.params), q.ground_truth) << q.query_id;
            EXPECT_TRUE(equivalent_truth(oracle_ground_truth(b, q.subtype, q.params), q.ground_truth, 1e-6))
                << q.query_id << " " << q.subtype;
        }
    }
}

TEST(Generation, SubstitutionsAreLogged) {
    UserBundle b = linear_bundle();
    QueryOptions opt;
    opt.per_dimension = 4;
    const auto set = generate_queries(b, opt);
    EXPECT_EQ(set.queries.size(), 20u);
    for (const auto& s : set.substitutions) {
        EXPECT_NE(s.requested, s.used);
        EXPECT_FALSE(s.reason.empty());
    }
    for (const auto& q : set.queries) EXPECT_TRUE(subtype_info(q.subtype).fallback || subtype_info(q.subtype).dimension == q.dimension) << q.subtype;
}

TEST(Equivalence, RankingsAreOrderSensitive) {
    GroundTruth a;
    a.answer_type = AnswerType::ranked_list;
    a.items = {"x", "y"};
    a.ranking_keys = {2.0, 1.0};
    GroundTruth b = a;
    b.ranking_keys = {2.0 + 1e-12, 1.0};
    EXPECT_TRUE(equivalent_truth(a, b));
    b.items = {"y", "x"};
    EXPECT_FALSE(equivalent_truth(a, b));
    b = a;
    b.ranking_keys = {2.5, 1.0};
    EXPECT_FALSE(equivalent_truth(a, b));
}
