#include "hsynth/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "hsynth/calendar.hpp"
#include "hsynth/io.hpp"

namespace hsynth {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <class T> T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing text");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    }
}

std::string resolve(const std::filesystem::path& base, const std::string& value) {
    if (value.empty() || base.empty()) return value;
    std::filesystem::path p(value);
    return p.is_absolute() ? value : (base / p).lexically_normal().string();
}

std::string fmt_double(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

} // namespace

void check_config(const GeneratorConfig& c) {
    auto fail = [](const std::string& key, const std::string& why) { throw ConfigError("config key '" + key + "': " + why); };
    if (c.users < 1) fail("users", "must be >= 1");
    if (c.horizon_min < 180) fail("horizon_min", "must be >= 180");
    if (c.horizon_max < c.horizon_min) fail("horizon_max", "must be >= horizon_min");
    if (c.sparsity.weekly_cap < 0) fail("weekly_cap", "must be >= 0");
    if (c.sparsity.max_active < 0) fail("max_active", "must be >= 0");
    if (c.sparsity.warmup_days < 0) fail("warmup_days", "must be >= 0");
    if (!(c.weights.p_max >= 0.0 && c.weights.p_max <= 1.0)) fail("p_max", "must be in [0, 1]");
    if (!(c.weights.storyline >= 0.0)) fail("storyline_weight", "must be >= 0");
    if (!(c.weights.texture >= 0.0)) fail("texture_weight", "must be >= 0");
    if (!(c.weights.gap_multiplier >= 1.0)) fail("gap_multiplier", "must be >= 1");
    if (!(c.exam_density > 0.0)) fail("exam_density", "must be > 0");
    if (!(c.absence_rate >= 0.0 && c.absence_rate < 1.0)) fail("absence_rate", "must be in [0, 1)");
    if (c.threads < 0) fail("threads", "must be >= 0");
    try {
        parse_iso_date(c.epoch);
    } catch (const std::exception& e) {
        fail("epoch", e.what());
    }
}

GeneratorConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    GeneratorConfig c;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"users", [&](auto& k, auto& v) { c.users = parse_number<int>(k, v); }},
        {"root_seed", [&](auto& k, auto& v) { c.root_seed = parse_number<std::uint64_t>(k, v); }},
        {"horizon_min", [&](auto& k, auto& v) { c.horizon_min = parse_number<int>(k, v); }},
        {"horizon_max", [&](auto& k, auto& v) { c.horizon_max = parse_number<int>(k, v); }},
        {"weekly_cap", [&](auto& k, auto& v) { c.sparsity.weekly_cap = parse_number<int>(k, v); }},
        {"max_active", [&](auto& k, auto& v) { c.sparsity.max_active = parse_number<int>(k, v); }},
        {"warmup_days", [&](auto& k, auto& v) { c.sparsity.warmup_days = parse_number<int>(k, v); }},
        {"p_max", [&](auto& k, auto& v) { c.weights.p_max = parse_double(k, v); }},
        {"storyline_weight", [&](auto& k, auto& v) { c.weights.storyline = parse_double(k, v); }},
        {"texture_weight", [&](auto& k, auto& v) { c.weights.texture = parse_double(k, v); }},
        {"gap_multiplier", [&](auto& k, auto& v) { c.weights.gap_multiplier = parse_double(k, v); }},
        {"exam_density", [&](auto& k, auto& v) { c.exam_density = parse_double(k, v); }},
        {"absence_rate", [&](auto& k, auto& v) { c.absence_rate = parse_double(k, v); }},
        {"kernel_continuity",
         [&](auto& k, auto& v) {
             if (v == "true" || v == "continuous") {
                 c.kernel_mode = KernelMode::continuous;
             } else if (v == "false" || v == "literal") {
                 c.kernel_mode = KernelMode::literal;
             } else {
                 throw ConfigError("config key '" + k + "': expected true or false");
             }
         }},
        {"epoch", [&](auto&, auto& v) { c.epoch = v; }},
        {"threads", [&](auto& k, auto& v) { c.threads = parse_number<int>(k, v); }},
        {"indicator_catalog_path", [&](auto&, auto& v) { c.indicator_catalog_path = resolve(base_dir, v); }},
        {"event_catalog_path", [&](auto&, auto& v) { c.event_catalog_path = resolve(base_dir, v); }},
        {"mixture_path", [&](auto&, auto& v) { c.mixture_path = resolve(base_dir, v); }},
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(key, value);
    }
    check_config(c);
    return c;
}

GeneratorConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.parent_path());
}

std::string render_config(const GeneratorConfig& c) {
    std::ostringstream os;
    os << "users = " << c.users << '\n'
       << "root_seed = " << c.root_seed << '\n'
       << "horizon_min = " << c.horizon_min << '\n'
       << "horizon_max = " << c.horizon_max << '\n'
       << "weekly_cap = " << c.sparsity.weekly_cap << '\n'
       << "max_active = " << c.sparsity.max_active << '\n'
       << "warmup_days = " << c.sparsity.warmup_days << '\n'
       << "p_max = " << fmt_double(c.weights.p_max) << '\n'
       << "storyline_weight = " << fmt_double(c.weights.storyline) << '\n'
       << "texture_weight = " << fmt_double(c.weights.texture) << '\n'
       << "gap_multiplier = " << fmt_double(c.weights.gap_multiplier) << '\n'
       << "exam_density = " << fmt_double(c.exam_density) << '\n'
       << "absence_rate = " << fmt_double(c.absence_rate) << '\n'
       << "kernel_continuity = " << (c.kernel_mode == KernelMode::continuous ? "true" : "false") << '\n'
       << "epoch = " << c.epoch << '\n'
       << "threads = " << c.threads << '\n';
    if (!c.indicator_catalog_path.empty()) os << "indicator_catalog_path = " << c.indicator_catalog_path << '\n';
    if (!c.event_catalog_path.empty()) os << "event_catalog_path = " << c.event_catalog_path << '\n';
    if (!c.mixture_path.empty()) os << "mixture_path = " << c.mixture_path << '\n';
    return os.str();
}

Catalogs resolve_catalogs(const GeneratorConfig& cfg) {
    Catalogs c = builtin_catalogs();
    try {
        if (!cfg.indicator_catalog_path.empty()) {
            c.indicators = indicator_catalog_from_json(read_file(cfg.indicator_catalog_path), cfg.indicator_catalog_path);
        }
        if (!cfg.event_catalog_path.empty()) {
            c.events = event_catalog_from_json(read_file(cfg.event_catalog_path), cfg.event_catalog_path);
        }
        if (!cfg.mixture_path.empty()) {
            c.mixture = mixture_from_json(read_file(cfg.mixture_path), cfg.mixture_path);
        }
        check_catalogs(c);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return c;
}

} // namespace hsynth
