#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fq::model {

/// Inverse temperature in reduced units (k_B = 1).
struct ThermoState {
  explicit ThermoState(double beta);
  double beta;
};

enum class Role { host, guest };

struct Particle {
  double mass = 1.0;
  int species = 0;
  Role role = Role::host;
};

/// Isotropic confining well ½k|x_i - center|².
struct HarmonicWell {
  std::size_t particle;
  double k;
  std::vector<double> center;
};

/// Spring ½k(r_ij - r0)².
struct HarmonicBond {
  std::size_t i;
  std::size_t j;
  double k;
  double r0 = 0.0;
};

struct LennardJones {
  std::size_t i;
  std::size_t j;
  double epsilon;
  double sigma;
};

using Term = std::variant<HarmonicWell, HarmonicBond, LennardJones>;

enum class Coupling { linear, softcore };

struct EnergyForces {
  double energy = 0.0;
  std::vector<double> forces;
};

/// Particle layout shared by every potential on the same system.
class ParticleSystem {
 public:
  ParticleSystem(std::size_t dim, std::vector<Particle> particles);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return particles_.size(); }
  std::size_t n_coords() const { return dim_ * particles_.size(); }
  const std::vector<Particle>& particles() const { return particles_; }
  std::vector<std::size_t> indices(Role role) const;

  void check_coords(std::span<const double> coords) const;

 private:
  std::size_t dim_;
  std::vector<Particle> particles_;
};

/// H(λ) = H_host + H_guest + λ·H_interaction, with an optional Beutler-style
/// soft-core form for Lennard-Jones interaction terms.
///
/// Immutable after construction; evaluation is reentrant.
class AlchemicalPotential {
 public:
  AlchemicalPotential(ParticleSystem system, std::vector<Term> host_terms, std::vector<Term> guest_terms,
                      std::vector<Term> interaction_terms, Coupling coupling = Coupling::linear,
                      double softcore_alpha = 0.5);

  const ParticleSystem& system() const { return system_; }
  const std::vector<Term>& host_terms() const { return host_terms_; }
  const std::vector<Term>& guest_terms() const { return guest_terms_; }
  const std::vector<Term>& interaction_terms() const { return interaction_terms_; }
  Coupling coupling() const { return coupling_; }
  double softcore_alpha() const { return softcore_alpha_; }

  /// Energy and forces (= −∇E) at coupling λ ∈ [0, 1].
  EnergyForces energy_and_forces(std::span<const double> coords, double lambda) const;
  double energy(std::span<const double> coords, double lambda) const;

  double host_energy(std::span<const double> coords) const;
  double guest_energy(std::span<const double> coords) const;
  /// Unscaled interaction energy (the λ = 1 value in linear mode).
  double interaction_energy(std::span<const double> coords) const;

  /// Same system with every interaction term removed (λ-independent).
  AlchemicalPotential decoupled() const;

 private:
  ParticleSystem system_;
  std::vector<Term> host_terms_;
  std::vector<Term> guest_terms_;
  std::vector<Term> interaction_terms_;
  Coupling coupling_;
  double softcore_alpha_;
};

/// Accumulates E and −∇E of a single term, scaled by `weight`.
void accumulate_term(const Term& term, std::span<const double> coords, std::size_t dim, double weight,
                     double& energy, std::span<double> forces);
void accumulate_softcore_lj(const LennardJones& term, std::span<const double> coords, std::size_t dim,
                            double lambda, double alpha, double& energy, std::span<double> forces);

/// −(1/β) ln Z for a potential made only of quadratic terms (wells and
/// zero-rest-length bonds). Kinetic contributions are excluded.
double analytic_free_energy(const AlchemicalPotential& potential, double lambda, const ThermoState& state);

/// Reduced-units to kJ/mol conversion carried by reports.
struct UnitScale {
  double kj_per_mol = 1.0;
  double to_report(double reduced) const { return reduced * kj_per_mol; }
  double from_report(double kj) const { return kj / kj_per_mol; }
};

}  // namespace fq::model
