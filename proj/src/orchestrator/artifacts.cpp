#include "artifacts.hpp"

#include "fq/model/oracle.hpp"

namespace fq::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

json artifact_ref(const TaskStore& store, const fs::path& file) {
  return {{"path", fs::relative(file, store.root()).generic_string()}, {"hash", content_hash(read_file(file))}};
}

fs::path artifact_path(const TaskStore& store, const json& ref) {
  const fs::path path = store.root() / ref.at("path").get<std::string>();
  if (!fs::exists(path)) throw StoreCorruption("missing artifact " + path.string());
  if (content_hash(read_file(path)) != ref.at("hash").get<std::string>()) {
    throw StoreCorruption("artifact hash mismatch for " + path.string());
  }
  return path;
}

json load_json_artifact(const TaskStore& store, const json& ref) {
  const auto path = artifact_path(store, ref);
  try {
    return json::parse(read_file(path));
  } catch (const json::exception&) {
    throw StoreCorruption("artifact " + path.string() + " is not valid JSON");
  }
}

void collect_artifact_refs(const json& j, std::vector<json>& out) {
  if (j.is_object()) {
    if (j.size() == 2 && j.contains("path") && j.contains("hash")) {
      out.push_back(j);
      return;
    }
    for (const auto& [k, v] : j.items()) collect_artifact_refs(v, out);
  } else if (j.is_array()) {
    for (const auto& v : j) collect_artifact_refs(v, out);
  }
}

json entries_to_json(const std::vector<surrogate::TrainingEntry>& entries) {
  json out = json::array();
  for (const auto& e : entries) {
    json x = {{"id", e.id}, {"coords", e.coords}, {"energy", e.energy}, {"tier", model::to_string(e.tier)}};
    if (e.forces) x["forces"] = *e.forces;
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<surrogate::TrainingEntry> entries_from_json(const json& j) {
  std::vector<surrogate::TrainingEntry> out;
  for (const auto& x : j) {
    surrogate::TrainingEntry e;
    e.id = x.at("id");
    e.coords = x.at("coords").get<std::vector<double>>();
    e.energy = x.at("energy");
    const std::string tier = x.at("tier");
    e.tier = tier == "HIGH" || tier == "high" ? model::Tier::high
             : tier == "BASE" || tier == "base" ? model::Tier::base
                                                : model::Tier::mid;
    if (x.contains("forces")) e.forces = x.at("forces").get<std::vector<double>>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace fq::orchestrator
