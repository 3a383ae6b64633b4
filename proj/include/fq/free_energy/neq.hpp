#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fq/free_energy/estimators.hpp"
#include "fq/sampling/langevin.hpp"

namespace fq::free_energy {

struct SwitchProtocol {
  std::size_t switch_steps = 1000;
  double dt = 0.01;
  double gamma = 1.0;
  std::string id = "linear";
};

/// One nonequilibrium switch between two surfaces.
///
/// U_mix(s) = (1 − s)·U_from + s·U_to with s swept 0 → 1 (forward) or 1 → 0
/// (backward) in `switch_steps` increments. Each increment adds
/// U_mix(s_{i+1}) − U_mix(s_i) at fixed coordinates to the work, followed by
/// one Langevin step on U_mix(s_{i+1}). For a backward switch `start` must be
/// equilibrated on `to`.
WorkRecord neq_switch(const sampling::Surface& from, const sampling::Surface& to, std::span<const double> start,
                      const SwitchProtocol& protocol, Direction direction, std::uint64_t seed,
                      const model::ThermoState& state, std::size_t snapshot_id = 0);

void write_work_records_csv(std::span<const WorkRecord> records, const std::filesystem::path& path);
std::vector<WorkRecord> read_work_records_csv(const std::filesystem::path& path);

}  // namespace fq::free_energy
