#include "fq/free_energy/fep.hpp"

#include <map>

namespace fq::free_energy {

FepResult run_fep(const EnergyAt& energy, const SurfaceAt& surface_at, std::span<const double> start,
                  const FepConfig& config, const model::ThermoState& state) {
  std::map<double, std::vector<Configuration>> sampled;
  LambdaSchedule schedule = config.schedule;
  for (std::size_t round = 0;; ++round) {
    std::vector<std::vector<Configuration>> windows;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      const double lambda = schedule[k];
      auto it = sampled.find(lambda);
      if (it == sampled.end()) {
        auto params = config.sampling;
        // Window seeds derive from λ so refinement does not reshuffle existing windows.
        params.seed = config.sampling.seed * 1000003ULL + static_cast<std::uint64_t>(lambda * 1e9);
        const auto traj = sampling::langevin_propagate(surface_at(lambda), start, params, state, lambda);
        std::vector<Configuration> snaps;
        for (auto& f : sampling::draw_snapshots(traj, config.snapshot_stride, config.max_snapshots)) {
          snaps.push_back(std::move(f.coords));
        }
        it = sampled.emplace(lambda, std::move(snaps)).first;
      }
      windows.push_back(it->second);
    }

    auto matrix = evaluate_reduced_potentials(windows, energy, schedule, state);
    auto mbar = mbar_solve(matrix, config.mbar);
    auto overlaps = overlap_diagnostic(matrix, mbar.f);

    bool poor = false;
    for (double o : overlaps) poor = poor || o < config.overlap_threshold;
    if (poor && round < config.max_refinements) {
      schedule = refine_schedule(schedule, overlaps, config.overlap_threshold);
      continue;
    }

    FepResult out{schedule, std::move(matrix), std::move(mbar), std::move(overlaps), {}, std::move(windows)};
    const auto last = out.mbar.f.size() - 1;
    out.delta = {out.mbar.f[last] / state.beta, out.mbar.stderr_k[last] / state.beta};
    return out;
  }
}

}  // namespace fq::free_energy
