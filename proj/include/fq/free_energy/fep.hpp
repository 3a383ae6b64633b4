#pragma once

#include <functional>
#include <vector>

#include "fq/free_energy/estimators.hpp"
#include "fq/free_energy/mbar.hpp"
#include "fq/free_energy/schedule.hpp"
#include "fq/sampling/langevin.hpp"

namespace fq::free_energy {

struct FepConfig {
  LambdaSchedule schedule = LambdaSchedule::uniform_decoupling(11);
  sampling::LangevinParams sampling;
  std::size_t snapshot_stride = 1;
  std::size_t max_snapshots = 2000;
  MBAROptions mbar;
  double overlap_threshold = 0.03;
  std::size_t max_refinements = 2;
};

struct FepResult {
  LambdaSchedule schedule;
  ReducedPotentialMatrix matrix;
  MBARResult mbar;
  std::vector<double> overlaps;
  /// G(last window) − G(first window) in energy units.
  Estimate delta;
  std::vector<std::vector<Configuration>> snapshots;
};

using SurfaceAt = std::function<sampling::Surface(double lambda)>;

/// Samples every window, assembles u_kn and solves MBAR. Windows whose
/// adjacent overlap falls below the threshold get a midpoint inserted, up to
/// `max_refinements` rounds; already-sampled windows are reused.
FepResult run_fep(const EnergyAt& energy, const SurfaceAt& surface_at, std::span<const double> start,
                  const FepConfig& config, const model::ThermoState& state);

}  // namespace fq::free_energy
