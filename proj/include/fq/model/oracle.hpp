#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fq/error.hpp"
#include "fq/model/potential.hpp"

namespace fq::model {

enum class Tier { base, mid, high };

const char* to_string(Tier tier);

/// Seeded sum of Gaussian bumps in pair-distance space.
struct BumpSpec {
  double amplitude = 0.0;
  double width = 0.3;
  std::size_t n_bumps = 4;
  double r_min = 0.8;
  double r_max = 2.5;
  std::uint64_t seed = 1;
  /// Also apply bumps to each guest particle's distance from the origin
  /// (lets single-particle systems carry a correction).
  bool anchor_to_origin = false;
};

struct Bump {
  double amplitude;
  double center;
};

/// Smooth correction p(x) = Σ_pairs Σ_b A_b exp(−(r − c_b)²/(2w²)).
///
/// Pairs are every guest–guest pair plus every guest–host pair; guest–host
/// contributions are scaled by λ so that the correction vanishes with the
/// interaction at λ = 0.
class PerturbationField {
 public:
  PerturbationField(const ParticleSystem& system, BumpSpec spec);

  const BumpSpec& spec() const { return spec_; }
  const std::vector<Bump>& bumps() const { return bumps_; }

  double energy(std::span<const double> coords, double lambda) const;
  /// Adds weight·p to `energy` and −weight·∇p to `forces`.
  void accumulate(std::span<const double> coords, double lambda, double weight, double& energy,
                  std::span<double> forces) const;

 private:
  double profile(double r, double& slope) const;

  std::size_t dim_;
  std::vector<std::size_t> guest_;
  std::vector<std::size_t> host_;
  BumpSpec spec_;
  std::vector<Bump> bumps_;
};

struct OracleSpec {
  BumpSpec mid;
  BumpSpec high;
};

/// Tiers requested with forces beyond what they expose.
class EnergiesOnly : public Error {
 public:
  using Error::Error;
};

/// BASE → MID → HIGH oracle hierarchy: MID = BASE + p₁, HIGH = MID + p₂.
/// BASE and MID expose forces; HIGH exposes energies only.
class OracleHierarchy {
 public:
  OracleHierarchy(AlchemicalPotential base, OracleSpec spec);

  const AlchemicalPotential& base() const { return base_; }
  const PerturbationField& mid_correction() const { return p1_; }
  const PerturbationField& high_correction() const { return p2_; }

  double energy(Tier tier, std::span<const double> coords, double lambda) const;
  EnergyForces energy_and_forces(Tier tier, std::span<const double> coords, double lambda) const;

 private:
  AlchemicalPotential base_;
  PerturbationField p1_;
  PerturbationField p2_;
};

}  // namespace fq::model
