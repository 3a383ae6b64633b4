#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "fq/model/potential.hpp"
#include "fq/sampling/rng.hpp"

namespace fq::sampling {

using ForceFn = std::function<model::EnergyForces(std::span<const double>)>;

/// Something the integrator can move on: energies/forces plus per-coordinate masses.
struct Surface {
  ForceFn evaluate;
  std::vector<double> masses;  // one entry per coordinate
};

std::vector<double> per_coordinate_masses(const model::ParticleSystem& system);
Surface make_surface(const model::AlchemicalPotential& potential, double lambda);

struct LangevinParams {
  double dt = 0.01;
  double gamma = 1.0;
  std::size_t n_steps = 1000;
  std::size_t n_equil = 0;
  std::uint64_t seed = 1;
  std::size_t record_interval = 1;
  double divergence_bound = 1e8;

  void validate() const;
};

struct Frame {
  std::size_t step;
  std::vector<double> coords;
  double energy;
};

struct Trajectory {
  std::vector<Frame> frames;
  double beta = 1.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

/// BAOAB Langevin integrator holding one phase-space point.
class LangevinIntegrator {
 public:
  LangevinIntegrator(std::vector<double> masses, std::vector<double> coords, double beta, double dt, double gamma,
                     std::uint64_t seed, std::uint64_t stream = 0);

  /// Re-evaluates forces at the current coordinates, e.g. after the surface changed.
  void refresh(const ForceFn& field);
  /// One B-A-O-A-B step; forces and energy are current afterwards.
  void step(const ForceFn& field);

  std::span<const double> coords() const { return x_; }
  std::span<const double> velocities() const { return v_; }
  double energy() const { return energy_; }
  double kinetic_energy() const;

 private:
  std::vector<double> masses_;
  std::vector<double> x_;
  std::vector<double> v_;
  std::vector<double> f_;
  double energy_ = 0.0;
  double beta_;
  double dt_;
  double c1_;
  double c2_;
  Philox4x32 rng_;
  std::normal_distribution<double> gauss_;
};

/// Samples the β-canonical distribution on `surface`, discarding n_equil burn-in steps.
Trajectory langevin_propagate(const Surface& surface, std::span<const double> start, const LangevinParams& params,
                              const model::ThermoState& state, double lambda = 1.0);

/// Every `stride`-th frame, at most `max_count`, order preserved.
std::vector<Frame> draw_snapshots(const Trajectory& trajectory, std::size_t stride, std::size_t max_count);

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace fq::sampling
