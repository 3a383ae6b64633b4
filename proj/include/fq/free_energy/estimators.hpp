#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fq/model/potential.hpp"

namespace fq::free_energy {

struct Estimate {
  double value = 0.0;
  double error = 0.0;  ///< one standard error
};

/// Δf = −ln⟨exp(−Δu)⟩ over reduced potential differences (log-sum-exp).
double zwanzig_estimate(std::span<const double> delta_u);
/// Same, with a delta-method standard error.
Estimate zwanzig_with_error(std::span<const double> delta_u);

/// Sum of per-window differences; errors combined in quadrature.
Estimate telescope_sum(std::span<const Estimate> window_deltas);

enum class Direction { forward, backward };

const char* to_string(Direction direction);

struct WorkRecord {
  Direction direction = Direction::forward;
  double work = 0.0;  ///< reduced units (energy, not β-scaled)
  double heat = 0.0;  ///< potential-energy change during propagation
  double start_energy = 0.0;
  double end_energy = 0.0;
  std::size_t snapshot_id = 0;
  std::string protocol_id;
  std::uint64_t seed = 0;
};

struct BootstrapOptions {
  std::size_t n_resamples = 1000;
  std::uint64_t seed = 1;
};

/// ΔF = −(1/β) ln⟨exp(−βW)⟩ over forward works; bootstrap error.
Estimate jarzynski_estimate(std::span<const double> forward_work, const model::ThermoState& state,
                            const BootstrapOptions& options = {});

struct BarResult {
  Estimate estimate;
  bool converged = false;
};

/// Bennett acceptance ratio over forward and backward work sets (ΔF in
/// energy units). Backward works are those of the reverse switch B → A.
BarResult crooks_bar_estimate(std::span<const double> forward_work, std::span<const double> backward_work,
                              const model::ThermoState& state, const BootstrapOptions& options = {});
/// Point estimate only.
BarResult bar_point(std::span<const double> forward_work, std::span<const double> backward_work, double beta);

/// Where the forward work density p_F(W) crosses p_B(−W).
struct HistogramCrossing {
  double crossing = 0.0;
  double bin_width = 0.0;
  bool found = false;
};

HistogramCrossing work_histogram_crossing(std::span<const double> forward_work, std::span<const double> backward_work,
                                          std::size_t n_bins = 30);

/// ΔG_solvated_binding = ΔG_partially_solvated_binding − ΔG_ligand_solvation.
/// Both legs are G(λ=1) − G(λ=0); negative binding means favourable.
struct BindingCycleResult {
  Estimate partial_binding;
  Estimate ligand_solvation;
  Estimate binding;
  std::string tier;
};

BindingCycleResult binding_cycle(const Estimate& partial_binding, const Estimate& ligand_solvation,
                                 std::string tier = "MM");

}  // namespace fq::free_energy
