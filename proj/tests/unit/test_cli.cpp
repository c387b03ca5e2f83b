#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "hsynth/io.hpp"
#include "hsynth/scoring.hpp"
#include "json.hpp"

using namespace hsynth;
namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "hsynth_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(HSYNTH_CLI_PATH) + " " + args + " > " + (kScratch / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string last_output() { return read_file(kScratch / "last.log"); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kScratch);
        fs::create_directories(kScratch);
        write_file(kScratch / "small.cfg", "users = 2\nroot_seed = 77\nhorizon_min = 380\nhorizon_max = 420\n");
        ASSERT_EQ(run("generate --config " + (kScratch / "small.cfg").string() + " --out " + (kScratch / "a").string() +
                      " --per-dimension 4"),
                  0)
            << last_output();
    }
    static void TearDownTestSuite() { fs::remove_all(kScratch); }
    static std::string cfg() { return (kScratch / "small.cfg").string(); }
    static std::string bundle() { return (kScratch / "a" / "user-0000").string(); }
};

} // namespace

TEST_F(Cli, GenerateIsReproducible) {
    ASSERT_EQ(run("generate --config " + cfg() + " --out " + (kScratch / "b").string() + " --per-dimension 4 --threads 2"),
              0);
    EXPECT_EQ(directory_digest(kScratch / "a"), directory_digest(kScratch / "b"));
    const auto manifest = nlohmann::json::parse(read_file(kScratch / "a" / "manifest.json"));
    EXPECT_EQ(manifest["users"].size(), 2u);
    EXPECT_EQ(manifest["root_seed"], 77);
    EXPECT_TRUE(fs::exists(kScratch / "a" / "user-0001" / "queries_agent.json"));
}

TEST_F(Cli, UsageAndConfigErrorsExitTwo) {
    EXPECT_EQ(run("generate --out " + (kScratch / "c").string() + " --config /nonexistent.cfg"), 2);
    EXPECT_EQ(run("generate --config " + cfg() + " --out " + (kScratch / "c").string() + " --users 0"), 2);
    EXPECT_EQ(run("generate"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("audit --cohort " + (kScratch / "missing").string()), 2);
    EXPECT_EQ(run("queries --bundle " + bundle() + " --split 1/2"), 2);
    EXPECT_EQ(run("plot --bundle " + bundle() + " --indicator nope --out " + (kScratch / "x.svg").string()), 2);
}

TEST_F(Cli, QueriesHonourSplit) {
    const auto out = kScratch / "q";
    ASSERT_EQ(run("queries --bundle " + bundle() + " --per-dimension 5 --split 100/0/0 --out " + out.string()), 0)
        << last_output();
    const auto qs = queries_from_json(read_file(out / bundle_files::queries));
    ASSERT_EQ(qs.size(), 25u);
    for (const auto& q : qs) EXPECT_EQ(q.tier, Tier::Easy) << q.query_id;
}

TEST_F(Cli, ScorePerfectAndEmpty) {
    const auto qpath = fs::path(bundle()) / bundle_files::queries;
    const auto qs = queries_from_json(read_file(qpath));
    nlohmann::json perfect = nlohmann::json::object();
    for (const auto& q : qs) perfect[q.query_id] = nlohmann::json::parse(truth_as_response(q.ground_truth));
    write_file(kScratch / "perfect.json", perfect.dump());
    write_file(kScratch / "empty.json", "{}");

    ASSERT_EQ(run("score --queries " + qpath.string() + " --responses " + (kScratch / "perfect.json").string() +
                  " --out " + (kScratch / "r1.json").string()),
              0)
        << last_output();
    auto r = nlohmann::json::parse(read_file(kScratch / "r1.json"));
    EXPECT_DOUBLE_EQ(r["total"]["accuracy"].get<double>(), 100.0);

    ASSERT_EQ(run("score --queries " + qpath.string() + " --responses " + (kScratch / "empty.json").string() +
                  " --out " + (kScratch / "r0.json").string()),
              0);
    r = nlohmann::json::parse(read_file(kScratch / "r0.json"));
    EXPECT_DOUBLE_EQ(r["total"]["accuracy"].get<double>(), 0.0);
    EXPECT_NE(last_output().find("missing response"), std::string::npos);

    write_file(kScratch / "broken.json", "{");
    EXPECT_EQ(run("score --queries " + qpath.string() + " --responses " + (kScratch / "broken.json").string()), 1);
}

TEST_F(Cli, AuditAndPlot) {
    ASSERT_EQ(run("audit --cohort " + (kScratch / "a").string() + " --out " + (kScratch / "audit.json").string()), 0);
    EXPECT_NE(last_output().find("Exam-device consistency"), std::string::npos);
    const auto c = nlohmann::json::parse(read_file(kScratch / "audit.json"));
    EXPECT_EQ(c["users"], 2);
    EXPECT_DOUBLE_EQ(c["range_violation_rate_pre"].get<double>(), 0.0);

    const auto svg = kScratch / "hr.svg";
    ASSERT_EQ(run("plot --bundle " + bundle() + " --indicator resting_hr --from 0 --to 120 --out " + svg.string()), 0)
        << last_output();
    EXPECT_NE(read_file(svg).find("<svg"), std::string::npos);
}
