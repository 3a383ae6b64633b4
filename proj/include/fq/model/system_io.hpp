#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "fq/model/oracle.hpp"
#include "fq/model/potential.hpp"

namespace fq::model {

/// Parsed system definition file (schema in docs/system_schema.md).
struct SystemDefinition {
  AlchemicalPotential potential;
  OracleSpec oracle;
  std::vector<double> start_coords;
};

SystemDefinition parse_system(const nlohmann::json& doc);
SystemDefinition load_system(const std::filesystem::path& path);

BumpSpec parse_bump_spec(const nlohmann::json& doc, std::uint64_t default_seed);

}  // namespace fq::model
