#include "fq/sampling/langevin.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fq/error.hpp"

namespace fq::sampling {

std::vector<double> per_coordinate_masses(const model::ParticleSystem& system) {
  std::vector<double> m;
  m.reserve(system.n_coords());
  for (const auto& p : system.particles()) {
    for (std::size_t d = 0; d < system.dim(); ++d) m.push_back(p.mass);
  }
  return m;
}

Surface make_surface(const model::AlchemicalPotential& potential, double lambda) {
  return Surface{[potential, lambda](std::span<const double> x) { return potential.energy_and_forces(x, lambda); },
                 per_coordinate_masses(potential.system())};
}

void LangevinParams::validate() const {
  if (!(dt > 0.0)) throw ValidationError("Langevin dt must be positive");
  if (!(gamma > 0.0)) throw ValidationError("Langevin gamma must be positive");
  if (!(n_equil < n_steps)) throw ValidationError("n_equil must be smaller than n_steps");
  if (record_interval == 0) throw ValidationError("record_interval must be at least 1");
}

LangevinIntegrator::LangevinIntegrator(std::vector<double> masses, std::vector<double> coords, double beta, double dt,
                                       double gamma, std::uint64_t seed, std::uint64_t stream)
    : masses_(std::move(masses)),
      x_(std::move(coords)),
      v_(x_.size()),
      f_(x_.size()),
      beta_(beta),
      dt_(dt),
      c1_(std::exp(-gamma * dt)),
      c2_(std::sqrt(1.0 - std::exp(-2.0 * gamma * dt))),
      rng_(seed, stream) {
  if (masses_.size() != x_.size()) throw ValidationError("mass and coordinate arrays differ in length");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] = gauss_(rng_) / std::sqrt(beta_ * masses_[i]);
}

void LangevinIntegrator::refresh(const ForceFn& field) {
  auto ef = field(x_);
  energy_ = ef.energy;
  f_ = std::move(ef.forces);
}

void LangevinIntegrator::step(const ForceFn& field) {
  const double half = 0.5 * dt_;
  const auto n = x_.size();
  for (std::size_t i = 0; i < n; ++i) {
    v_[i] += half * f_[i] / masses_[i];
    x_[i] += half * v_[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    v_[i] = c1_ * v_[i] + c2_ * gauss_(rng_) / std::sqrt(beta_ * masses_[i]);
    x_[i] += half * v_[i];
  }
  refresh(field);
  for (std::size_t i = 0; i < n; ++i) v_[i] += half * f_[i] / masses_[i];
}

double LangevinIntegrator::kinetic_energy() const {
  double k = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) k += 0.5 * masses_[i] * v_[i] * v_[i];
  return k;
}

Trajectory langevin_propagate(const Surface& surface, std::span<const double> start, const LangevinParams& params,
                              const model::ThermoState& state, double lambda) {
  params.validate();
  LangevinIntegrator integrator(surface.masses, std::vector<double>(start.begin(), start.end()), state.beta,
                                params.dt, params.gamma, params.seed);
  integrator.refresh(surface.evaluate);
  if (!std::isfinite(integrator.energy())) throw ValidationError("start configuration has non-finite energy");

  Trajectory traj;
  traj.beta = state.beta;
  traj.lambda = lambda;
  traj.seed = params.seed;
  traj.frames.reserve((params.n_steps - params.n_equil) / params.record_interval + 1);
  for (std::size_t s = 1; s <= params.n_steps; ++s) {
    integrator.step(surface.evaluate);
    const double e = integrator.energy();
    if (!std::isfinite(e) || std::abs(e) > params.divergence_bound) {
      throw UnstableIntegration(fmt::format("unstable integration: |E| = {:.3e}", e), s);
    }
    if (s > params.n_equil && (s - params.n_equil) % params.record_interval == 0) {
      const auto x = integrator.coords();
      traj.frames.push_back(Frame{s, std::vector<double>(x.begin(), x.end()), e});
    }
  }
  return traj;
}

std::vector<Frame> draw_snapshots(const Trajectory& trajectory, std::size_t stride, std::size_t max_count) {
  if (stride == 0) throw ValidationError("snapshot stride must be at least 1");
  if (trajectory.frames.empty()) throw ValidationError("cannot draw snapshots from an empty trajectory");
  std::vector<Frame> out;
  for (std::size_t i = 0; i < trajectory.frames.size() && out.size() < max_count; i += stride) {
    out.push_back(trajectory.frames[i]);
  }
  return out;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trajectory file " + path.string());
  const std::size_t n = trajectory.frames.empty() ? 0 : trajectory.frames.front().coords.size();
  out << "step,lambda,energy";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i;
  out << '\n';
  for (const auto& f : trajectory.frames) {
    out << f.step << ',' << fmt::format("{}", trajectory.lambda) << ',' << fmt::format("{}", f.energy);
    for (double c : f.coords) out << ',' << fmt::format("{}", c);
    out << '\n';
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read trajectory file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("step,lambda,energy", 0) != 0) throw ParseError("bad trajectory header", 1);
  Trajectory traj;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    try {
      while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError("non-numeric trajectory entry", lineno);
    }
    if (values.size() < 3) throw ParseError("truncated trajectory row", lineno);
    traj.lambda = values[1];
    traj.frames.push_back(Frame{static_cast<std::size_t>(values[0]), std::vector<double>(values.begin() + 3, values.end()),
                                values[2]});
  }
  return traj;
}

}  // namespace fq::sampling
