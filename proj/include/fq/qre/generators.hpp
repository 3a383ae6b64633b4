#pragma once

#include <cstdint>

#include "fq/qre/integrals.hpp"

namespace fq::qre {

/// Pariser–Parr–Pople chain with alternating hopping, in Hartree.
struct PppChainSpec {
  std::size_t n_sites = 4;
  double alpha = 0.0;
  double beta_short = -0.095;
  double beta_long = -0.080;
  /// On-site repulsion; Ohno interpolation γ_ij = U/√(1 + (U·r_ij/κ)²).
  double hubbard_u = 0.41;
  double bond_length = 1.4;  ///< Å
  double ohno_kappa = 0.5291;  ///< Ha·Å
  /// Electrons; 0 means half filling.
  std::size_t n_electrons = 0;
  enum class Orbitals { site, huckel, scf };
  /// Basis of the returned integrals; `scf` uses restricted Hartree–Fock orbitals.
  Orbitals orbitals = Orbitals::scf;
};

FermionIntegrals ppp_chain(const PppChainSpec& spec);

/// Restricted Hartree–Fock orbitals (columns, ascending orbital energy) for
/// the integrals' electron count; odd electrons half-occupy the top orbital.
Eigen::MatrixXd scf_orbitals(const FermionIntegrals& integrals, std::size_t max_iterations = 500, double tol = 1e-10);

/// Random real integrals with the full 8-fold symmetry; entries uniform in
/// [−scale, scale]. Number conserving by construction.
FermionIntegrals random_integrals(std::size_t n_spatial, std::size_t n_electrons, std::uint64_t seed, double scale = 1.0);

}  // namespace fq::qre
