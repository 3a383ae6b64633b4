#include "fq/model/oracle.hpp"

#include <cmath>

#include "fq/sampling/rng.hpp"

namespace fq::model {

const char* to_string(Tier tier) {
  switch (tier) {
    case Tier::base:
      return "BASE";
    case Tier::mid:
      return "MID";
    case Tier::high:
      return "HIGH";
  }
  return "?";
}

PerturbationField::PerturbationField(const ParticleSystem& system, BumpSpec spec)
    : dim_(system.dim()), guest_(system.indices(Role::guest)), host_(system.indices(Role::host)), spec_(spec) {
  if (!(spec_.width > 0.0)) throw ValidationError("bump width must be positive");
  if (!(spec_.r_max >= spec_.r_min)) throw ValidationError("bump range must satisfy r_min <= r_max");
  sampling::Philox4x32 rng(spec_.seed, 0x6f7261636c65ULL);
  bumps_.reserve(spec_.n_bumps);
  for (std::size_t b = 0; b < spec_.n_bumps; ++b) {
    const double u = sampling::uniform01(rng);
    const double v = sampling::uniform01(rng);
    // Amplitudes in ±[0.5, 1]·A so no bump is negligible.
    const double magnitude = 0.5 + 0.5 * v;
    const double sign = (b % 2 == 0) ? 1.0 : -1.0;
    bumps_.push_back({spec_.amplitude * sign * magnitude, spec_.r_min + u * (spec_.r_max - spec_.r_min)});
  }
}

double PerturbationField::profile(double r, double& slope) const {
  const double inv_w2 = 1.0 / (spec_.width * spec_.width);
  double value = 0.0;
  slope = 0.0;
  for (const auto& b : bumps_) {
    const double d = r - b.center;
    const double g = b.amplitude * std::exp(-0.5 * d * d * inv_w2);
    value += g;
    slope -= g * d * inv_w2;
  }
  return value;
}

void PerturbationField::accumulate(std::span<const double> coords, double lambda, double weight, double& energy,
                                   std::span<double> forces) const {
  if (bumps_.empty() || spec_.amplitude == 0.0) return;
  std::vector<double> disp(dim_);
  auto pair = [&](std::size_t i, std::size_t j, double scale) {
    double r2 = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      disp[d] = coords[i * dim_ + d] - coords[j * dim_ + d];
      r2 += disp[d] * disp[d];
    }
    const double r = std::sqrt(r2);
    double slope = 0.0;
    energy += weight * scale * profile(r, slope);
    if (r == 0.0) return;  // radial direction undefined
    const double f = weight * scale * slope / r;
    for (std::size_t d = 0; d < dim_; ++d) {
      forces[i * dim_ + d] -= f * disp[d];
      forces[j * dim_ + d] += f * disp[d];
    }
  };

  for (std::size_t a = 0; a < guest_.size(); ++a) {
    for (std::size_t b = a + 1; b < guest_.size(); ++b) pair(guest_[a], guest_[b], 1.0);
  }
  if (lambda != 0.0) {
    for (auto g : guest_) {
      for (auto h : host_) pair(g, h, lambda);
    }
  }
  if (spec_.anchor_to_origin) {
    for (auto g : guest_) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) r2 += coords[g * dim_ + d] * coords[g * dim_ + d];
      const double r = std::sqrt(r2);
      double slope = 0.0;
      energy += weight * profile(r, slope);
      if (r == 0.0) continue;
      for (std::size_t d = 0; d < dim_; ++d) forces[g * dim_ + d] -= weight * slope * coords[g * dim_ + d] / r;
    }
  }
}

double PerturbationField::energy(std::span<const double> coords, double lambda) const {
  double e = 0.0;
  std::vector<double> scratch(coords.size(), 0.0);
  accumulate(coords, lambda, 1.0, e, scratch);
  return e;
}

OracleHierarchy::OracleHierarchy(AlchemicalPotential base, OracleSpec spec)
    : base_(std::move(base)), p1_(base_.system(), spec.mid), p2_(base_.system(), spec.high) {}

double OracleHierarchy::energy(Tier tier, std::span<const double> coords, double lambda) const {
  double e = base_.energy(coords, lambda);
  if (tier == Tier::base) return e;
  e += p1_.energy(coords, lambda);
  if (tier == Tier::mid) return e;
  return e + p2_.energy(coords, lambda);
}

EnergyForces OracleHierarchy::energy_and_forces(Tier tier, std::span<const double> coords, double lambda) const {
  if (tier == Tier::high) {
    throw EnergiesOnly("energies only at this tier: HIGH oracle does not provide forces");
  }
  auto out = base_.energy_and_forces(coords, lambda);
  if (tier == Tier::mid) {
    double correction = 0.0;
    p1_.accumulate(coords, lambda, 1.0, correction, out.forces);
    out.energy += correction;
  }
  return out;
}

}  // namespace fq::model
