#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsynth/catalog.hpp"
#include "hsynth/model.hpp"

namespace hsynth {

/// Load failure carrying the file and field (and day, for device records)
/// where decoding stopped.
class LoadError : public std::runtime_error {
public:
    LoadError(std::string file, std::string field, std::string detail);
    [[nodiscard]] const std::string& file() const { return file_; }
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::string file_;
    std::string field_;
};

/// Bundle file names inside a bundle directory.
namespace bundle_files {
inline constexpr const char* profile = "profile.json";
inline constexpr const char* plan = "plan.json";
inline constexpr const char* indicators = "indicators.json";
inline constexpr const char* events = "events.json";
inline constexpr const char* exams = "exams.json";
inline constexpr const char* device = "device.jsonl";
inline constexpr const char* audit = "audit.json";
inline constexpr const char* seeds = "seeds.json";
inline constexpr const char* queries = "queries.json";
inline constexpr const char* queries_agent = "queries_agent.json";
} // namespace bundle_files

/// Writes every bundle file into @p dir (created if needed). Output bytes are
/// a pure function of the bundle.
void export_bundle(const UserBundle& bundle, const std::filesystem::path& dir);
/// Strict inverse of export_bundle: unknown fields, missing fields and
/// truncated device records raise LoadError.
UserBundle load_bundle(const std::filesystem::path& dir);

/// Per-file serializers (exposed for tests and the CLI).
std::string audit_to_json(const AuditReport& report);
AuditReport audit_from_json(const std::string& text, const std::string& file = bundle_files::audit);

/// queries.json (with ground truth) or the agent-facing variant (query_id,
/// dimension, tier, text only).
std::string queries_to_json(const std::vector<Query>& queries, bool agent_facing = false);
std::vector<Query> queries_from_json(const std::string& text, const std::string& file = bundle_files::queries);

std::string indicator_catalog_to_json(const std::vector<IndicatorTemplate>& templates);
std::vector<IndicatorTemplate> indicator_catalog_from_json(const std::string& text, const std::string& file);
std::string event_catalog_to_json(const EventCatalog& catalog);
EventCatalog event_catalog_from_json(const std::string& text, const std::string& file);
std::string mixture_to_json(const std::vector<MixtureCell>& cells);
std::vector<MixtureCell> mixture_from_json(const std::string& text, const std::string& file);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes (truncate + write); throws std::runtime_error.
void write_file(const std::filesystem::path& path, const std::string& content);

/// Hex digest over the sorted relative paths and contents of every regular
/// file under @p dir.
std::string directory_digest(const std::filesystem::path& dir);

} // namespace hsynth
