#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "hsynth/catalog.hpp"
#include "hsynth/model.hpp"
#include "hsynth/policy.hpp"

namespace hsynth {

/// Raised for unreadable or malformed configuration; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Generator settings. The on-disk form is a `key = value` text file; blank
/// lines and `#` comments are ignored, unknown keys are rejected.
struct GeneratorConfig {
    int users = 10;
    std::uint64_t root_seed = 42;
    int horizon_min = 388; ///< inclusive
    int horizon_max = 1813; ///< inclusive
    SparsityConfig sparsity;
    PolicyWeights weights;
    double exam_density = 2.0; ///< visits per year
    double absence_rate = 0.0;
    KernelMode kernel_mode = KernelMode::continuous;
    std::string epoch = "2022-01-03";
    int threads = 0; ///< 0 = hardware concurrency
    std::string indicator_catalog_path;
    std::string event_catalog_path;
    std::string mixture_path;

    bool operator==(const GeneratorConfig&) const = default;
};

/// Throws ConfigError naming the offending key.
void check_config(const GeneratorConfig& cfg);

/// Parses the text form. Relative catalog paths are resolved against @p base_dir.
GeneratorConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
GeneratorConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const GeneratorConfig& cfg);

/// Built-in catalogs with any configured JSON catalog files substituted, checked.
Catalogs resolve_catalogs(const GeneratorConfig& cfg);

/// Environment variable holding the default config path.
inline constexpr const char* kConfigEnvVar = "HSYNTH_CONFIG";

} // namespace hsynth
