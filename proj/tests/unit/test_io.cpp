#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "hsynth/io.hpp"
#include "hsynth/queries.hpp"

using namespace hsynth;
using hsynth::fixtures::small_cohort;
namespace fs = std::filesystem;

namespace {

class BundleDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hsynth_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        export_bundle(small_cohort().front(), dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    void replace_in(const char* file, const std::string& from, const std::string& to) {
        std::string text = read_file(dir_ / file);
        const auto pos = text.find(from);
        ASSERT_NE(pos, std::string::npos) << from;
        text.replace(pos, from.size(), to);
        write_file(dir_ / file, text);
    }

    fs::path dir_;
};

} // namespace

TEST_F(BundleDir, RoundTripIsExact) {
    EXPECT_EQ(load_bundle(dir_), small_cohort().front());
}

TEST_F(BundleDir, ExportIsByteStable) {
    const auto before = directory_digest(dir_);
    export_bundle(load_bundle(dir_), dir_);
    EXPECT_EQ(directory_digest(dir_), before);
}

TEST_F(BundleDir, UnknownFieldRejected) {
    replace_in(bundle_files::profile, "{", "{\"favourite_colour\": \"blue\",");
    try {
        load_bundle(dir_);
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_EQ(e.file(), bundle_files::profile);
        EXPECT_NE(std::string(e.what()).find("favourite_colour"), std::string::npos);
    }
}

TEST_F(BundleDir, MissingFieldRejected) {
    replace_in(bundle_files::seeds, "\"root_seed\"", "\"root_sed\"");
    EXPECT_THROW(load_bundle(dir_), LoadError);
}

TEST_F(BundleDir, TruncatedDeviceRecordNamesTheDay) {
    std::string text = read_file(dir_ / bundle_files::device);
    std::size_t pos = 0;
    for (int i = 0; i < 5; ++i) pos = text.find('\n', pos) + 1;
    const auto end = text.find('\n', pos);
    text = text.substr(0, pos + (end - pos) / 2);
    write_file(dir_ / bundle_files::device, text);
    try {
        load_bundle(dir_);
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_EQ(e.file(), bundle_files::device);
        EXPECT_EQ(e.field(), "day 5");
    }
}

TEST_F(BundleDir, MissingDayRecordsDetected) {
    std::string text = read_file(dir_ / bundle_files::device);
    std::size_t pos = 0;
    for (int i = 0; i < 10; ++i) pos = text.find('\n', pos) + 1;
    write_file(dir_ / bundle_files::device, text.substr(0, pos));
    try {
        load_bundle(dir_);
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_EQ(e.field(), "day 10");
    }
}

TEST_F(BundleDir, StatusMutationSurvivesLoadButFailsValidation) {
    UserBundle b = load_bundle(dir_);
    ASSERT_FALSE(b.exams.empty());
    auto& r = b.exams.front().results.front();
    r.status = r.status == ExamStatus::normal ? ExamStatus::abnormal : ExamStatus::normal;
    export_bundle(b, dir_);
    const auto v = validate_bundle(load_bundle(dir_));
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v.front().type, "status_consistency");
}

TEST(Io, MissingDirectory) {
    EXPECT_THROW(load_bundle("/nonexistent/hsynth"), LoadError);
}

TEST(Io, QueriesRoundTripAndAgentViewHidesTruth) {
    QueryOptions opt;
    opt.per_dimension = 4;
    const auto qs = generate_queries(small_cohort().front(), opt).queries;
    EXPECT_EQ(queries_from_json(queries_to_json(qs)), qs);
    const auto agent = queries_to_json(qs, true);
    EXPECT_EQ(agent.find("ground_truth"), std::string::npos);
    EXPECT_EQ(agent.find("subtype"), std::string::npos);
}

TEST(Io, AuditRoundTrip) {
    const auto& a = small_cohort().front().audit;
    EXPECT_EQ(audit_from_json(audit_to_json(a)), a);
    EXPECT_THROW(audit_from_json("{}"), LoadError);
}
