#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "fq/orchestrator/store.hpp"
#include "fq/surrogate/dataset.hpp"

namespace fq::orchestrator {

/// {"path": <relative to store root>, "hash": <content hash>}
nlohmann::json artifact_ref(const TaskStore& store, const std::filesystem::path& file);
/// Absolute path of a referenced artifact after checking its hash.
std::filesystem::path artifact_path(const TaskStore& store, const nlohmann::json& ref);
nlohmann::json load_json_artifact(const TaskStore& store, const nlohmann::json& ref);
/// Every {"path","hash"} object nested in `j`.
void collect_artifact_refs(const nlohmann::json& j, std::vector<nlohmann::json>& out);

nlohmann::json entries_to_json(const std::vector<surrogate::TrainingEntry>& entries);
std::vector<surrogate::TrainingEntry> entries_from_json(const nlohmann::json& j);

}  // namespace fq::orchestrator
