#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>

#include "hsynth/audit.hpp"
#include "hsynth/config.hpp"
#include "hsynth/engine.hpp"
#include "hsynth/io.hpp"
#include "hsynth/queries.hpp"
#include "hsynth/random.hpp"
#include "hsynth/scoring.hpp"
#include "json.hpp"
#include "plot.hpp"

namespace fs = std::filesystem;
using namespace hsynth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Usage or configuration problem detected after CLI parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// POSTs JSON to an http(s) URL; nullopt on any failure.
std::optional<std::string> post_json(const std::string& url, const std::string& body) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    try {
        httplib::Client client(origin);
        client.set_connection_timeout(5);
        client.set_read_timeout(60);
        auto res = client.Post(path, body, "application/json");
        if (!res || res->status / 100 != 2) return std::nullopt;
        return res->body;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

class RemotePlanner final : public Planner {
public:
    RemotePlanner(const Catalogs& c, std::string url)
        : fallback_(c.themes), inner_([url](const std::string& b) { return post_json(url, b); }, fallback_) {}
    TrajectoryPlan plan(const Profile& p, int h, const std::string& epoch, Stream& s) const override {
        return inner_.plan(p, h, epoch, s);
    }

private:
    TemplatePlanner fallback_;
    JsonPlanner inner_;
};

GeneratorConfig config_from(const std::string& flag) {
    std::string path = flag;
    if (path.empty()) {
        if (const char* env = std::getenv(kConfigEnvVar)) path = env;
    }
    if (path.empty()) return {};
    if (!fs::exists(path)) throw UsageError("config file not found: " + path);
    return load_config(path);
}

void write_queries(const UserBundle& b, const fs::path& dir, const QueryOptions& opts, std::ostream* log) {
    const QuerySet set = generate_queries(b, opts);
    write_file(dir / bundle_files::queries, queries_to_json(set.queries));
    write_file(dir / bundle_files::queries_agent, queries_to_json(set.queries, true));
    if (log) {
        for (const auto& s : set.substitutions) {
            *log << "substituted " << s.query_id << ": " << s.requested << " -> " << s.used << " (" << s.reason
                 << ")\n";
        }
    }
}

std::vector<fs::path> bundle_dirs(const fs::path& root) {
    std::vector<fs::path> out;
    if (fs::exists(root / bundle_files::audit)) return {root};
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && fs::exists(e.path() / bundle_files::audit)) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// -- subcommands ------------------------------------------------------------

struct GenerateArgs {
    std::string config, out, policy_url, planner_url;
    std::optional<int> users, threads;
    std::optional<std::uint64_t> seed;
    bool serial = false;
    int per_dimension = 20;
    std::optional<double> absence_rate;
};

int cmd_generate(const GenerateArgs& a) {
    GeneratorConfig cfg = config_from(a.config);
    if (a.users) cfg.users = *a.users;
    if (a.seed) cfg.root_seed = *a.seed;
    if (a.threads) cfg.threads = *a.threads;
    if (a.absence_rate) cfg.absence_rate = *a.absence_rate;
    if (a.serial) cfg.threads = 1;
    try {
        check_config(cfg);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    if (a.per_dimension < 0) throw UsageError("--per-dimension must be >= 0");

    Generator gen(cfg, resolve_catalogs(cfg));
    if (!a.policy_url.empty()) {
        const std::string url = a.policy_url;
        gen.set_policy([url](const Catalogs& c) {
            return std::make_shared<JsonEventPolicy>(c.events, [url](const std::string& b) { return post_json(url, b); });
        });
    }
    if (!a.planner_url.empty()) {
        const std::string url = a.planner_url;
        gen.set_planner([url](const Catalogs& c) { return std::make_shared<RemotePlanner>(c, url); });
    }

    const fs::path out(a.out);
    fs::create_directories(out);
    QueryOptions qopts;
    qopts.per_dimension = a.per_dimension;
    qopts.seed = cfg.root_seed;

    std::mutex mu;
    std::vector<std::pair<std::string, SeedRecord>> records;
    gen.generate_cohort(cfg.threads, [&](UserBundle&& b) {
        const fs::path dir = out / b.profile.user_id;
        export_bundle(b, dir);
        if (a.per_dimension > 0) write_queries(b, dir, qopts, nullptr);
        std::lock_guard lock(mu);
        records.emplace_back(b.profile.user_id, b.seeds);
    });
    std::sort(records.begin(), records.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    nlohmann::ordered_json users = nlohmann::ordered_json::array();
    for (const auto& [id, s] : records) {
        users.push_back({{"user_id", id}, {"user_index", s.user_index}, {"user_seed", s.user_seed}, {"dir", id}});
    }
    GeneratorConfig recorded = cfg;
    recorded.threads = 0; // execution setting; output does not depend on it
    const std::string cfg_text = render_config(recorded);
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(hash_bytes(cfg_text)));
    nlohmann::ordered_json manifest{{"root_seed", cfg.root_seed},
                                    {"users", users},
                                    {"config_digest", digest},
                                    {"config", cfg_text},
                                    {"queries_per_dimension", a.per_dimension}};
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << records.size() << " bundles to " << out.string() << '\n';
    return kExitOk;
}

struct QueriesArgs {
    std::string bundle, split = "20/30/50", out;
    int per_dimension = 20;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_queries(const QueriesArgs& a) {
    if (!fs::is_directory(a.bundle)) throw UsageError("bundle directory not found: " + a.bundle);
    QueryOptions opts;
    try {
        opts.split = parse_split(a.split);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a.per_dimension < 0) throw UsageError("--per-dimension must be >= 0");
    opts.per_dimension = a.per_dimension;
    const UserBundle b = load_bundle(a.bundle);
    opts.seed = a.seed_set ? a.seed : b.seeds.root_seed;
    const fs::path out = a.out.empty() ? fs::path(a.bundle) : fs::path(a.out);
    fs::create_directories(out);
    write_queries(b, out, opts, &std::cout);
    std::cout << "wrote " << 5 * opts.per_dimension << " queries to " << (out / bundle_files::queries).string()
              << '\n';
    return kExitOk;
}

struct ScoreArgs {
    std::string queries, responses, out, judge;
};

int cmd_score(const ScoreArgs& a) {
    for (const auto* p : {&a.queries, &a.responses}) {
        if (!fs::exists(*p)) throw UsageError("file not found: " + *p);
    }
    const auto queries = queries_from_json(read_file(a.queries), a.queries);
    const auto responses = parse_responses_file(read_file(a.responses));
    std::unique_ptr<RubricJudge> judge;
    if (a.judge.empty()) {
        judge = std::make_unique<FallbackJudge>();
    } else {
        const std::string url = a.judge;
        judge = std::make_unique<JsonJudge>([url](const std::string& body) {
            auto r = post_json(url, body);
            if (!r) throw std::runtime_error("judge endpoint unreachable");
            return *r;
        });
    }
    const ScoreReport rep = score_all(queries, responses, *judge);
    if (!a.out.empty()) write_file(a.out, report_to_json(rep));
    std::cout << render_report(rep);
    for (const auto& id : rep.missing) std::cout << "missing response: " << id << '\n';
    for (const auto& id : rep.unmatched) std::cout << "response without query: " << id << '\n';
    return kExitOk;
}

struct AuditArgs {
    std::string cohort, out;
};

int cmd_audit(const AuditArgs& a) {
    if (!fs::is_directory(a.cohort)) throw UsageError("cohort directory not found: " + a.cohort);
    std::vector<AuditReport> reports;
    for (const auto& dir : bundle_dirs(a.cohort)) {
        reports.push_back(audit_from_json(read_file(dir / bundle_files::audit), (dir / bundle_files::audit).string()));
    }
    if (reports.empty()) throw UsageError("no bundles under " + a.cohort);
    const CohortAudit c = aggregate_audits(reports);
    if (!a.out.empty()) write_file(a.out, cohort_audit_to_json(c));
    std::cout << render_audit_table(c);
    return kExitOk;
}

struct PlotArgs {
    std::string bundle, indicator, out;
    std::optional<int> from, to;
};

int cmd_plot(const PlotArgs& a) {
    if (!fs::is_directory(a.bundle)) throw UsageError("bundle directory not found: " + a.bundle);
    const UserBundle b = load_bundle(a.bundle);
    PlotRequest req;
    req.indicator = a.indicator;
    req.from = a.from.value_or(0);
    req.to = a.to.value_or(b.horizon() - 1);
    std::string svg;
    try {
        svg = render_trajectory_svg(b, req);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    write_file(a.out, svg);
    std::cout << "wrote " << a.out << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hsynth: longitudinal health trajectory synthesis and benchmark compiler"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a cohort of user bundles");
    g->add_option("--config", gen.config, "Config file (default: $" + std::string(kConfigEnvVar) + ")");
    g->add_option("--users", gen.users, "Number of users");
    g->add_option("--seed", gen.seed, "Root seed");
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--threads", gen.threads, "Worker threads (0 = hardware concurrency)");
    g->add_flag("--serial", gen.serial, "Generate users one at a time");
    g->add_option("--absence-rate", gen.absence_rate, "Per indicator-day absence probability");
    g->add_option("--per-dimension", gen.per_dimension, "Queries per dimension written with each bundle (0 = none)");
    g->add_option("--policy-url", gen.policy_url, "External event policy endpoint");
    g->add_option("--planner-url", gen.planner_url, "External trajectory planner endpoint");

    QueriesArgs qa;
    auto* q = app.add_subcommand("queries", "Compile evaluation queries for one bundle");
    q->add_option("--bundle", qa.bundle, "Bundle directory")->required();
    q->add_option("--per-dimension", qa.per_dimension, "Queries per dimension");
    q->add_option("--split", qa.split, "Easy/Medium/Hard split, e.g. 20/30/50");
    q->add_option("--seed", qa.seed, "Query sampling seed (default: the bundle's root seed)")
        ->each([&](const std::string&) { qa.seed_set = true; });
    q->add_option("--out", qa.out, "Output directory (default: the bundle directory)");

    ScoreArgs sa;
    auto* s = app.add_subcommand("score", "Score agent responses");
    s->add_option("--queries", sa.queries, "queries.json with ground truth")->required();
    s->add_option("--responses", sa.responses, "Responses: {query_id: canonical answer}")->required();
    s->add_option("--out", sa.out, "Report JSON path");
    s->add_option("--judge", sa.judge, "External rubric judge endpoint");

    AuditArgs aa;
    auto* au = app.add_subcommand("audit", "Aggregate bundle audits across a cohort");
    au->add_option("--cohort", aa.cohort, "Cohort directory")->required();
    au->add_option("--out", aa.out, "Aggregated audit JSON path");

    PlotArgs pa;
    auto* p = app.add_subcommand("plot", "Render an indicator trajectory as SVG");
    p->add_option("--bundle", pa.bundle, "Bundle directory")->required();
    p->add_option("--indicator", pa.indicator, "Indicator key")->required();
    p->add_option("--from", pa.from, "First day");
    p->add_option("--to", pa.to, "Last day (inclusive)");
    p->add_option("--out", pa.out, "Output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*g) return cmd_generate(gen);
        if (*q) return cmd_queries(qa);
        if (*s) return cmd_score(sa);
        if (*au) return cmd_audit(aa);
        if (*p) return cmd_plot(pa);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const LoadError& e) {
        std::cerr << "load error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
