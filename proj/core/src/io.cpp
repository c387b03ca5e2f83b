#include "hsynth/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hsynth {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

LoadError::LoadError(std::string file, std::string field, std::string detail)
    : std::runtime_error(file + ": " + (field.empty() ? std::string() : field + ": ") + detail),
      file_(std::move(file)),
      field_(std::move(field)) {}

namespace {

// Strict object reader: every field must be consumed exactly once.
class Reader {
public:
    Reader(const json& j, std::string file, std::string path) : j_(j), file_(std::move(file)), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw LoadError(file_, field, what);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        if (!j_.contains(key)) fail(field(key), "missing field");
        used_.insert(key);
        return j_.at(key);
    }

    template <class T> T get(const std::string& key) {
        const json& v = at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw std::invalid_argument("expected a number");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::invalid_argument("expected a string");
            }
            return v.get<T>();
        } catch (const std::exception& e) {
            fail(field(key), e.what());
        }
    }

    template <class T> T get_or(const std::string& key, T fallback) { return has(key) ? get<T>(key) : fallback; }

    template <class E> E get_enum(const std::string& key) {
        const auto text = get<std::string>(key);
        try {
            return parse_enum<E>(text);
        } catch (const std::exception& e) {
            fail(field(key), e.what());
        }
    }

    std::vector<std::string> strings(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) fail(field(key), "expected an array");
        std::vector<std::string> out;
        for (const auto& x : v) {
            if (!x.is_string()) fail(field(key), "expected strings");
            out.push_back(x.get<std::string>());
        }
        return out;
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) fail(field(key), "expected an array");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) fail(field(key), "expected numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    const json& array(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) fail(field(key), "expected an array");
        return v;
    }

    Reader child(const std::string& key) { return Reader(at(key), file_, field(key)); }

    void done() const {
        for (const auto& [k, _] : j_.items()) {
            if (!used_.count(k)) fail(field(k), "unknown field");
        }
    }

    const std::string& file() const { return file_; }
    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string file_;
    std::string path_;
    std::set<std::string> used_;
};

json parse_text(const std::string& text, const std::string& file) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw LoadError(file, "", std::string("malformed JSON: ") + e.what());
    }
}

std::string indexed(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// -- profile / plan ---------------------------------------------------------

ojson to_j(const Profile& p) {
    return {{"user_id", p.user_id},
            {"age", p.age},
            {"sex", std::string(to_string(p.sex))},
            {"age_stratum", std::string(to_string(p.age_stratum))},
            {"conditions", p.conditions},
            {"lifestyle_tags", p.lifestyle_tags},
            {"medications", p.medications},
            {"mixture_cell", p.mixture_cell}};
}

Profile profile_from(Reader r) {
    Profile p;
    p.user_id = r.get<std::string>("user_id");
    p.age = r.get<int>("age");
    p.sex = r.get_enum<Sex>("sex");
    p.age_stratum = r.get_enum<AgeStratum>("age_stratum");
    p.conditions = r.strings("conditions");
    p.lifestyle_tags = r.strings("lifestyle_tags");
    p.medications = r.strings("medications");
    p.mixture_cell = r.get<std::string>("mixture_cell");
    r.done();
    return p;
}

ojson to_j(const TrajectoryPlan& p) {
    ojson phases = ojson::array();
    for (const auto& ph : p.phases) {
        phases.push_back({{"index", ph.index},
                          {"name", ph.name},
                          {"start_day", ph.start_day},
                          {"end_day", ph.end_day},
                          {"theme_tag", ph.theme_tag}});
    }
    return {{"overall_theme", p.overall_theme}, {"epoch", p.epoch}, {"horizon_days", p.horizon_days},
            {"phases", phases}};
}

TrajectoryPlan plan_from(Reader r) {
    TrajectoryPlan p;
    p.overall_theme = r.get<std::string>("overall_theme");
    p.epoch = r.get<std::string>("epoch");
    p.horizon_days = r.get<int>("horizon_days");
    const json& arr = r.array("phases");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader pr(arr[i], r.file(), indexed("phases", i));
        Phase ph;
        ph.index = pr.get<int>("index");
        ph.name = pr.get<std::string>("name");
        ph.start_day = pr.get<int>("start_day");
        ph.end_day = pr.get<int>("end_day");
        ph.theme_tag = pr.get<std::string>("theme_tag");
        pr.done();
        p.phases.push_back(std::move(ph));
    }
    r.done();
    return p;
}

// -- indicators -------------------------------------------------------------

ojson range_j(const ReferenceRange& r) { return ojson::array({r.low, r.high}); }

ReferenceRange range_from(const json& j, const Reader& r, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        r.fail(field, "expected [low, high]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

void put_spec(ojson& j, const IndicatorSpec& s) {
    j["key"] = s.key;
    j["unit"] = s.unit;
    j["group"] = std::string(to_string(s.group));
    j["baseline"] = s.baseline;
    j["weekday_offsets"] = s.weekday_offsets;
    j["annual_amplitude"] = s.annual_amplitude;
    j["annual_phase"] = s.annual_phase;
    j["inertia"] = s.inertia;
    j["lower"] = s.lower;
    j["upper"] = s.upper;
    j["slope_limit"] = s.slope_limit;
    j["soft_cap"] = s.soft_cap;
    j["transform"] = std::string(to_string(s.transform));
    j["noise_loadings"] = {{"global", s.noise_loadings.global}, {"group", s.noise_loadings.group}};
    j["idio_variance"] = s.idio_variance;
    j["speed_class"] = std::string(to_string(s.speed_class));
    j["on_device"] = s.on_device;
    j["on_exam"] = s.on_exam;
    j["reference_range"] = s.reference_range ? range_j(*s.reference_range) : ojson(nullptr);
}

IndicatorSpec spec_from(Reader& r) {
    IndicatorSpec s;
    s.key = r.get<std::string>("key");
    s.unit = r.get<std::string>("unit");
    s.group = r.get_enum<IndicatorGroup>("group");
    s.baseline = r.get<double>("baseline");
    const auto w = r.numbers("weekday_offsets");
    if (w.size() != 7) r.fail(r.field("weekday_offsets"), "expected 7 values");
    std::copy(w.begin(), w.end(), s.weekday_offsets.begin());
    s.annual_amplitude = r.get<double>("annual_amplitude");
    s.annual_phase = r.get<double>("annual_phase");
    s.inertia = r.get<double>("inertia");
    s.lower = r.get<double>("lower");
    s.upper = r.get<double>("upper");
    s.slope_limit = r.get<double>("slope_limit");
    s.soft_cap = r.get<double>("soft_cap");
    s.transform = r.get_enum<Transform>("transform");
    {
        Reader n = r.child("noise_loadings");
        s.noise_loadings.global = n.get<double>("global");
        s.noise_loadings.group = n.get<double>("group");
        n.done();
    }
    s.idio_variance = r.get<double>("idio_variance");
    s.speed_class = r.get_enum<SpeedClass>("speed_class");
    s.on_device = r.get<bool>("on_device");
    s.on_exam = r.get<bool>("on_exam");
    const json& rr = r.at("reference_range");
    if (!rr.is_null()) s.reference_range = range_from(rr, r, r.field("reference_range"));
    return s;
}

ojson indicators_j(const std::vector<IndicatorSpec>& specs) {
    ojson arr = ojson::array();
    for (const auto& s : specs) {
        ojson j;
        put_spec(j, s);
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<IndicatorSpec> indicators_from(const json& j, const std::string& file) {
    if (!j.is_array()) throw LoadError(file, "", "expected an array of indicators");
    std::vector<IndicatorSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Reader r(j[i], file, indexed("indicators", i));
        out.push_back(spec_from(r));
        r.done();
    }
    return out;
}

// -- events -----------------------------------------------------------------

ojson to_j(const Event& e) {
    ojson impacts = ojson::array();
    for (const auto& i : e.impacts) {
        impacts.push_back(
            {{"indicator_key", i.indicator_key}, {"beta", i.beta}, {"tau_rise", i.tau_rise}, {"tau_fade", i.tau_fade}});
    }
    return {{"event_id", e.event_id},
            {"category", std::string(to_string(e.category))},
            {"name", e.name},
            {"catalog_id", e.catalog_id},
            {"start_day", e.start_day},
            {"duration", e.duration},
            {"end_day", e.end_day()},
            {"phase_index", e.phase_index},
            {"impacts", impacts}};
}

Event event_from(Reader r) {
    Event e;
    e.event_id = r.get<std::string>("event_id");
    e.category = r.get_enum<EventCategory>("category");
    e.name = r.get<std::string>("name");
    e.catalog_id = r.get<std::string>("catalog_id");
    e.start_day = r.get<int>("start_day");
    e.duration = r.get<int>("duration");
    if (r.get<int>("end_day") != e.end_day()) r.fail(r.field("end_day"), "must equal start_day + duration");
    e.phase_index = r.get<int>("phase_index");
    const json& arr = r.array("impacts");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader ir(arr[i], r.file(), r.field(indexed("impacts", i)));
        EventImpact imp;
        imp.indicator_key = ir.get<std::string>("indicator_key");
        imp.beta = ir.get<double>("beta");
        imp.tau_rise = ir.get<double>("tau_rise");
        imp.tau_fade = ir.get<double>("tau_fade");
        ir.done();
        e.impacts.push_back(std::move(imp));
    }
    r.done();
    return e;
}

// -- exams ------------------------------------------------------------------

ojson to_j(const ExamVisit& v) {
    ojson results = ojson::array();
    for (const auto& r : v.results) {
        results.push_back({{"indicator_key", r.indicator_key},
                           {"value", r.value},
                           {"unit", r.unit},
                           {"reference_range", range_j(r.reference_range)},
                           {"status", std::string(to_string(r.status))}});
    }
    return {{"visit_day", v.visit_day}, {"results", results}, {"summary", v.summary}};
}

ExamVisit exam_from(Reader r) {
    ExamVisit v;
    v.visit_day = r.get<int>("visit_day");
    const json& arr = r.array("results");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader rr(arr[i], r.file(), r.field(indexed("results", i)));
        ExamResult x;
        x.indicator_key = rr.get<std::string>("indicator_key");
        x.value = rr.get<double>("value");
        x.unit = rr.get<std::string>("unit");
        x.reference_range = range_from(rr.at("reference_range"), rr, rr.field("reference_range"));
        x.status = rr.get_enum<ExamStatus>("status");
        rr.done();
        v.results.push_back(std::move(x));
    }
    v.summary = r.get<std::string>("summary");
    r.done();
    return v;
}

// -- device -----------------------------------------------------------------

ojson to_j(const Decomposition& d) {
    return {{"baseline", d.baseline},
            {"ar_residual", d.ar_residual},
            {"event_raw", d.event_raw},
            {"event_delta", d.event_delta},
            {"noise", d.noise},
            {"proposal", d.proposal},
            {"proposal_natural", d.proposal_natural},
            {"value", d.value},
            {"range_violated", d.range_violated},
            {"slope_violated", d.slope_violated},
            {"clipped", d.clipped}};
}

Decomposition decomposition_from(Reader r) {
    Decomposition d;
    d.baseline = r.get<double>("baseline");
    d.ar_residual = r.get<double>("ar_residual");
    d.event_raw = r.get<double>("event_raw");
    d.event_delta = r.get<double>("event_delta");
    d.noise = r.get<double>("noise");
    d.proposal = r.get<double>("proposal");
    d.proposal_natural = r.get<double>("proposal_natural");
    d.value = r.get<double>("value");
    d.range_violated = r.get<bool>("range_violated");
    d.slope_violated = r.get<bool>("slope_violated");
    d.clipped = r.get<bool>("clipped");
    r.done();
    return d;
}

// -- audit ------------------------------------------------------------------

ojson to_j(const AuditCounts& c) {
    return {{"indicator_days", c.indicator_days}, {"logged_days", c.logged_days},
            {"range_violations", c.range_violations}, {"slope_violations", c.slope_violations},
            {"clipped", c.clipped},                 {"numeric", c.numeric},
            {"absent", c.absent}};
}

AuditCounts counts_from(Reader r) {
    AuditCounts c;
    c.indicator_days = r.get<long>("indicator_days");
    c.logged_days = r.get<long>("logged_days");
    c.range_violations = r.get<long>("range_violations");
    c.slope_violations = r.get<long>("slope_violations");
    c.clipped = r.get<long>("clipped");
    c.numeric = r.get<long>("numeric");
    c.absent = r.get<long>("absent");
    r.done();
    return c;
}

ojson to_j(const AuditReport& a) {
    ojson by_ind = ojson::object();
    for (const auto& [k, c] : a.by_indicator) by_ind[k] = to_j(c);
    ojson by_win = ojson::array();
    for (const auto& w : a.by_window) {
        by_win.push_back({{"start_day", w.start_day}, {"end_day", w.end_day}, {"counts", to_j(w.counts)}});
    }
    ojson absence = ojson::object();
    for (const auto& [k, n] : a.absence_counts) absence[k] = n;
    return {{"conformance",
             {{"key_presence_rate", a.key_presence_rate},
              {"unit_presence_rate", a.unit_presence_rate},
              {"keyed_records", a.keyed_records}}},
            {"completeness",
             {{"device_day_coverage", a.device_day_coverage},
              {"indicator_numeric_coverage", a.indicator_numeric_coverage},
              {"absence_counts", absence}}},
            {"plausibility",
             {{"available", a.plausibility_available},
              {"range_violation_rate_pre", a.range_violation_rate_pre},
              {"slope_violation_rate_pre", a.slope_violation_rate_pre},
              {"clipping_rate_post", a.clipping_rate_post},
              {"exam_device_consistency", a.exam_device_consistency},
              {"exam_overlap_checked", a.exam_overlap_checked},
              {"exam_overlap_consistent", a.exam_overlap_consistent}}},
            {"localization", {{"totals", to_j(a.totals)}, {"by_indicator", by_ind}, {"by_window", by_win}}}};
}

AuditReport audit_from(Reader r) {
    AuditReport a;
    {
        Reader c = r.child("conformance");
        a.key_presence_rate = c.get<double>("key_presence_rate");
        a.unit_presence_rate = c.get<double>("unit_presence_rate");
        a.keyed_records = c.get<long>("keyed_records");
        c.done();
    }
    {
        Reader c = r.child("completeness");
        a.device_day_coverage = c.get<double>("device_day_coverage");
        a.indicator_numeric_coverage = c.get<double>("indicator_numeric_coverage");
        const json& abs = c.at("absence_counts");
        if (!abs.is_object()) c.fail(c.field("absence_counts"), "expected an object");
        for (const auto& [k, v] : abs.items()) {
            if (!v.is_number_integer()) c.fail(c.field("absence_counts." + k), "expected an integer");
            a.absence_counts[k] = v.get<long>();
        }
        c.done();
    }
    {
        Reader c = r.child("plausibility");
        a.plausibility_available = c.get<bool>("available");
        a.range_violation_rate_pre = c.get<double>("range_violation_rate_pre");
        a.slope_violation_rate_pre = c.get<double>("slope_violation_rate_pre");
        a.clipping_rate_post = c.get<double>("clipping_rate_post");
        a.exam_device_consistency = c.get<double>("exam_device_consistency");
        a.exam_overlap_checked = c.get<long>("exam_overlap_checked");
        a.exam_overlap_consistent = c.get<long>("exam_overlap_consistent");
        c.done();
    }
    {
        Reader c = r.child("localization");
        a.totals = counts_from(c.child("totals"));
        const json& bi = c.at("by_indicator");
        if (!bi.is_object()) c.fail(c.field("by_indicator"), "expected an object");
        for (const auto& [k, v] : bi.items()) {
            a.by_indicator[k] = counts_from(Reader(v, r.file(), c.field("by_indicator." + k)));
        }
        const json& bw = c.array("by_window");
        for (std::size_t i = 0; i < bw.size(); ++i) {
            Reader wr(bw[i], r.file(), c.field(indexed("by_window", i)));
            AuditWindow w;
            w.start_day = wr.get<int>("start_day");
            w.end_day = wr.get<int>("end_day");
            w.counts = counts_from(wr.child("counts"));
            wr.done();
            a.by_window.push_back(w);
        }
        c.done();
    }
    r.done();
    return a;
}

// -- seeds ------------------------------------------------------------------

ojson to_j(const SeedRecord& s) {
    return {{"root_seed", s.root_seed},
            {"user_index", s.user_index},
            {"user_seed", s.user_seed},
            {"derivation", s.derivation},
            {"absence_rate", s.absence_rate},
            {"kernel_mode", std::string(to_string(s.kernel_mode))}};
}

SeedRecord seeds_from(Reader r) {
    SeedRecord s;
    s.root_seed = r.get<std::uint64_t>("root_seed");
    s.user_index = r.get<int>("user_index");
    s.user_seed = r.get<std::uint64_t>("user_seed");
    s.derivation = r.get<std::string>("derivation");
    s.absence_rate = r.get<double>("absence_rate");
    s.kernel_mode = r.get_enum<KernelMode>("kernel_mode");
    r.done();
    return s;
}

// -- queries ----------------------------------------------------------------

ojson to_j(const GroundTruth& g) {
    ojson evidence = ojson::array();
    for (const auto& e : g.evidence) evidence.push_back({{"entity_id", e.entity_id}, {"from", e.from}, {"to", e.to}});
    return {{"answer_type", std::string(to_string(g.answer_type))},
            {"numbers", g.numbers},
            {"items", g.items},
            {"dates", g.dates},
            {"ranking_keys", g.ranking_keys},
            {"unit", g.unit},
            {"source", std::string(to_string(g.source))},
            {"any_of", g.any_of},
            {"evidence", evidence},
            {"flags", g.flags}};
}

GroundTruth truth_from(Reader r) {
    GroundTruth g;
    g.answer_type = r.get_enum<AnswerType>("answer_type");
    g.numbers = r.numbers("numbers");
    g.items = r.strings("items");
    g.dates = r.strings("dates");
    g.ranking_keys = r.numbers("ranking_keys");
    g.unit = r.get<std::string>("unit");
    g.source = r.get_enum<AnswerSource>("source");
    g.any_of = r.get<bool>("any_of");
    const json& ev = r.array("evidence");
    for (std::size_t i = 0; i < ev.size(); ++i) {
        Reader er(ev[i], r.file(), r.field(indexed("evidence", i)));
        Evidence e;
        e.entity_id = er.get<std::string>("entity_id");
        e.from = er.get<int>("from");
        e.to = er.get<int>("to");
        er.done();
        g.evidence.push_back(std::move(e));
    }
    g.flags = r.strings("flags");
    r.done();
    return g;
}

ojson to_j(const QueryParams& p) {
    ojson j = ojson::object();
    if (!p.indicator.empty()) j["indicator"] = p.indicator;
    if (!p.indicator_b.empty()) j["indicator_b"] = p.indicator_b;
    if (!p.event_id.empty()) j["event_id"] = p.event_id;
    if (p.day) j["day"] = *p.day;
    if (p.from) j["from"] = *p.from;
    if (p.to) j["to"] = *p.to;
    if (!p.direction.empty()) j["direction"] = p.direction;
    if (p.threshold != 0.0) j["threshold"] = p.threshold;
    return j;
}

QueryParams params_from(Reader r) {
    QueryParams p;
    p.indicator = r.get_or<std::string>("indicator", "");
    p.indicator_b = r.get_or<std::string>("indicator_b", "");
    p.event_id = r.get_or<std::string>("event_id", "");
    if (r.has("day")) p.day = r.get<int>("day");
    if (r.has("from")) p.from = r.get<int>("from");
    if (r.has("to")) p.to = r.get<int>("to");
    p.direction = r.get_or<std::string>("direction", "");
    p.threshold = r.get_or<double>("threshold", 0.0);
    r.done();
    return p;
}

// -- catalogs ---------------------------------------------------------------

ojson vr(const ValueRange& v) { return ojson::array({v.lo, v.hi}); }

ValueRange vr_from(Reader& r, const std::string& key) {
    const json& j = r.at(key);
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        r.fail(r.field(key), "expected [lo, hi]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

// -- files ------------------------------------------------------------------

json parse_file(const std::filesystem::path& dir, const char* name) {
    const auto path = dir / name;
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw LoadError(name, "", e.what());
    }
    return parse_text(text, name);
}

} // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void export_bundle(const UserBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / bundle_files::profile, dump(to_j(b.profile)));
    write_file(dir / bundle_files::plan, dump(to_j(b.plan)));
    write_file(dir / bundle_files::indicators, dump(indicators_j(b.indicators)));
    ojson events = ojson::array();
    for (const auto& e : b.events) events.push_back(to_j(e));
    write_file(dir / bundle_files::events, dump(events));
    ojson exams = ojson::array();
    for (const auto& x : b.exams) exams.push_back(to_j(x));
    write_file(dir / bundle_files::exams, dump(exams));
    write_file(dir / bundle_files::audit, dump(to_j(b.audit)));
    write_file(dir / bundle_files::seeds, dump(to_j(b.seeds)));

    // device.jsonl: one line per day, indicators in key order
    std::string lines;
    const int horizon = b.plan.horizon_days;
    for (Day t = 0; t < horizon; ++t) {
        ojson rec;
        rec["day"] = t;
        ojson inds = ojson::object();
        for (const auto& [key, series] : b.device) {
            if (static_cast<std::size_t>(t) >= series.days.size()) continue;
            const auto& d = series.days[static_cast<std::size_t>(t)];
            ojson x;
            x["value"] = d.value ? ojson(*d.value) : ojson(nullptr);
            x["absent_reason"] = d.absent_reason ? ojson(std::string(to_string(*d.absent_reason))) : ojson(nullptr);
            x["decomposition"] = d.log ? to_j(*d.log) : ojson(nullptr);
            inds[key] = std::move(x);
        }
        rec["indicators"] = std::move(inds);
        lines += rec.dump();
        lines += '\n';
    }
    write_file(dir / bundle_files::device, lines);
}

UserBundle load_bundle(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw LoadError(dir.string(), "", "bundle directory not found");
    UserBundle b;
    b.profile = profile_from(Reader(parse_file(dir, bundle_files::profile), bundle_files::profile, ""));
    b.plan = plan_from(Reader(parse_file(dir, bundle_files::plan), bundle_files::plan, ""));
    b.indicators = indicators_from(parse_file(dir, bundle_files::indicators), bundle_files::indicators);
    {
        const json arr = parse_file(dir, bundle_files::events);
        if (!arr.is_array()) throw LoadError(bundle_files::events, "", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            b.events.push_back(event_from(Reader(arr[i], bundle_files::events, indexed("events", i))));
        }
    }
    {
        const json arr = parse_file(dir, bundle_files::exams);
        if (!arr.is_array()) throw LoadError(bundle_files::exams, "", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            b.exams.push_back(exam_from(Reader(arr[i], bundle_files::exams, indexed("exams", i))));
        }
    }
    b.audit = audit_from(Reader(parse_file(dir, bundle_files::audit), bundle_files::audit, ""));
    b.seeds = seeds_from(Reader(parse_file(dir, bundle_files::seeds), bundle_files::seeds, ""));

    // device records
    std::string text;
    try {
        text = read_file(dir / bundle_files::device);
    } catch (const std::exception& e) {
        throw LoadError(bundle_files::device, "", e.what());
    }
    for (const auto& s : b.indicators) {
        if (s.on_device) b.device[s.key].indicator_key = s.key;
    }
    std::istringstream in(text);
    std::string line;
    Day expected = 0;
    const std::string file = bundle_files::device;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::string where = "day " + std::to_string(expected);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw LoadError(file, where, std::string("truncated or malformed record: ") + e.what());
        }
        Reader r(rec, file, where);
        if (r.get<int>("day") != expected) r.fail(where + ".day", "day index out of sequence");
        Reader inds = r.child("indicators");
        for (auto& [key, series] : b.device) {
            Reader x = inds.child(key);
            DeviceDay d;
            const json& v = x.at("value");
            if (!v.is_null()) {
                if (!v.is_number()) x.fail(x.field("value"), "expected a number or null");
                d.value = v.get<double>();
            }
            const json& a = x.at("absent_reason");
            if (!a.is_null()) d.absent_reason = x.get_enum<AbsenceReason>("absent_reason");
            const json& dec = x.at("decomposition");
            if (!dec.is_null()) d.log = decomposition_from(Reader(dec, file, x.field("decomposition")));
            x.done();
            series.days.push_back(std::move(d));
        }
        inds.done();
        r.done();
        ++expected;
    }
    if (expected != b.plan.horizon_days) {
        throw LoadError(file, "day " + std::to_string(expected),
                        "truncated: expected " + std::to_string(b.plan.horizon_days) + " day records, found " +
                            std::to_string(expected));
    }
    return b;
}

std::string audit_to_json(const AuditReport& report) { return dump(to_j(report)); }

AuditReport audit_from_json(const std::string& text, const std::string& file) {
    return audit_from(Reader(parse_text(text, file), file, ""));
}

std::string queries_to_json(const std::vector<Query>& queries, bool agent_facing) {
    ojson arr = ojson::array();
    for (const auto& q : queries) {
        ojson j;
        j["query_id"] = q.query_id;
        j["dimension"] = std::string(to_string(q.dimension));
        j["tier"] = std::string(to_string(q.tier));
        if (!agent_facing) {
            j["subtype"] = q.subtype;
            j["params"] = to_j(q.params);
        }
        j["text"] = q.text;
        if (!agent_facing) j["ground_truth"] = to_j(q.ground_truth);
        arr.push_back(std::move(j));
    }
    return dump(arr);
}

std::vector<Query> queries_from_json(const std::string& text, const std::string& file) {
    const json arr = parse_text(text, file);
    if (!arr.is_array()) throw LoadError(file, "", "expected an array of queries");
    std::vector<Query> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(arr[i], file, indexed("queries", i));
        Query q;
        q.query_id = r.get<std::string>("query_id");
        q.dimension = r.get_enum<Dimension>("dimension");
        q.tier = r.get_enum<Tier>("tier");
        q.subtype = r.get<std::string>("subtype");
        q.params = params_from(r.child("params"));
        q.text = r.get<std::string>("text");
        q.ground_truth = truth_from(r.child("ground_truth"));
        r.done();
        out.push_back(std::move(q));
    }
    return out;
}

std::string indicator_catalog_to_json(const std::vector<IndicatorTemplate>& templates) {
    ojson arr = ojson::array();
    for (const auto& t : templates) {
        ojson j;
        put_spec(j, t.spec);
        j["person_sd"] = t.person_sd;
        j["age_shift_per_decade"] = t.age_shift_per_decade;
        j["sex_shift"] = t.sex_shift;
        ojson shifts = ojson::object();
        for (const auto& [c, v] : t.condition_shift) shifts[c] = v;
        j["condition_shift"] = shifts;
        arr.push_back(std::move(j));
    }
    return dump(arr);
}

std::vector<IndicatorTemplate> indicator_catalog_from_json(const std::string& text, const std::string& file) {
    const json arr = parse_text(text, file);
    if (!arr.is_array()) throw LoadError(file, "", "expected an array of indicator templates");
    std::vector<IndicatorTemplate> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(arr[i], file, indexed("indicators", i));
        IndicatorTemplate t;
        t.spec = spec_from(r);
        t.person_sd = r.get_or<double>("person_sd", 0.0);
        t.age_shift_per_decade = r.get_or<double>("age_shift_per_decade", 0.0);
        t.sex_shift = r.get_or<double>("sex_shift", 0.0);
        if (r.has("condition_shift")) {
            const json& cs = r.at("condition_shift");
            if (!cs.is_object()) r.fail(r.field("condition_shift"), "expected an object");
            for (const auto& [c, v] : cs.items()) {
                if (!v.is_number()) r.fail(r.field("condition_shift." + c), "expected a number");
                t.condition_shift[c] = v.get<double>();
            }
        }
        r.done();
        out.push_back(std::move(t));
    }
    return out;
}

std::string event_catalog_to_json(const EventCatalog& catalog) {
    ojson arr = ojson::array();
    for (const auto& e : catalog.entries) {
        ojson impacts = ojson::array();
        for (const auto& i : e.impacts) {
            impacts.push_back({{"indicator_key", i.indicator_key},
                               {"beta", vr(i.beta)},
                               {"tau_rise", vr(i.tau_rise)},
                               {"tau_fade", vr(i.tau_fade)}});
        }
        arr.push_back({{"id", e.id},
                       {"category", std::string(to_string(e.category))},
                       {"name", e.name},
                       {"affinity", e.affinity},
                       {"requires_any_condition", e.requires_any_condition},
                       {"base_rate", e.base_rate},
                       {"duration_median", e.duration_median},
                       {"duration_log_sd", e.duration_log_sd},
                       {"max_duration", e.max_duration},
                       {"impacts", impacts}});
    }
    return dump(arr);
}

EventCatalog event_catalog_from_json(const std::string& text, const std::string& file) {
    const json arr = parse_text(text, file);
    if (!arr.is_array()) throw LoadError(file, "", "expected an array of catalog entries");
    EventCatalog c;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(arr[i], file, indexed("entries", i));
        CatalogEntry e;
        e.id = r.get<std::string>("id");
        e.category = r.get_enum<EventCategory>("category");
        e.name = r.get<std::string>("name");
        e.affinity = r.has("affinity") ? r.strings("affinity") : std::vector<std::string>{};
        e.requires_any_condition =
            r.has("requires_any_condition") ? r.strings("requires_any_condition") : std::vector<std::string>{};
        e.base_rate = r.get<double>("base_rate");
        e.duration_median = r.get<double>("duration_median");
        e.duration_log_sd = r.get_or<double>("duration_log_sd", 0.0);
        e.max_duration = r.get_or<int>("max_duration", 730);
        const json& imps = r.array("impacts");
        for (std::size_t k = 0; k < imps.size(); ++k) {
            Reader ir(imps[k], file, r.field(indexed("impacts", k)));
            ImpactTemplate t;
            t.indicator_key = ir.get<std::string>("indicator_key");
            t.beta = vr_from(ir, "beta");
            t.tau_rise = vr_from(ir, "tau_rise");
            t.tau_fade = vr_from(ir, "tau_fade");
            ir.done();
            e.impacts.push_back(std::move(t));
        }
        r.done();
        c.entries.push_back(std::move(e));
    }
    return c;
}

std::string mixture_to_json(const std::vector<MixtureCell>& cells) {
    ojson arr = ojson::array();
    for (const auto& m : cells) {
        arr.push_back({{"name", m.name},
                       {"stratum", std::string(to_string(m.stratum))},
                       {"conditions", m.conditions},
                       {"weight", m.weight}});
    }
    return dump(arr);
}

std::vector<MixtureCell> mixture_from_json(const std::string& text, const std::string& file) {
    const json arr = parse_text(text, file);
    if (!arr.is_array()) throw LoadError(file, "", "expected an array of mixture cells");
    std::vector<MixtureCell> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(arr[i], file, indexed("cells", i));
        MixtureCell m;
        m.name = r.get<std::string>("name");
        m.stratum = r.get_enum<AgeStratum>("stratum");
        m.conditions = r.strings("conditions");
        m.weight = r.get<double>("weight");
        r.done();
        out.push_back(std::move(m));
    }
    return out;
}

std::string directory_digest(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(std::filesystem::relative(entry.path(), dir));
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h1 = 0xcbf29ce484222325ULL, h2 = 0x84222325cbf29ce4ULL;
    auto feed = [&](std::string_view bytes) {
        for (unsigned char c : bytes) {
            h1 = (h1 ^ c) * 0x100000001b3ULL;
            h2 = (h2 ^ c) * 0x00000100000001b3ULL + 0x9e3779b97f4a7c15ULL;
        }
    };
    for (const auto& f : files) {
        feed(f.generic_string());
        feed(std::string_view("\0", 1));
        feed(read_file(dir / f));
        feed(std::string_view("\0", 1));
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(h1),
                  static_cast<unsigned long long>(h2));
    return buf;
}

} // namespace hsynth
