#pragma once

#include "fq/qre/integrals.hpp"
#include "fq/qre/pauli.hpp"

namespace fq::qre {

/// Spin orbital (p, σ) lives on qubit 2p + σ (σ = 0 for α, 1 for β).
inline std::size_t spin_orbital(std::size_t p, int sigma) { return 2 * p + static_cast<std::size_t>(sigma); }

/// Jordan–Wigner mapping onto 2N qubits with n_j = (1 − Z_j)/2.
PauliHamiltonian jordan_wigner(const FermionIntegrals& integrals, double prune = 1e-14);

/// Ladder operator a_j (annihilate) or a†_j (create) as a Pauli sum.
PauliSum ladder(std::size_t j, bool create);

/// N̂ = Σ_j n_j on `n_qubits` qubits.
PauliSum number_operator(std::size_t n_qubits);

struct ShiftOptions {
  bool use_number = true;          ///< shift by c₁(N̂ − n)
  bool use_number_squared = true;  ///< shift by c₂(N̂² − n²)
};

struct SymmetryShift {
  PauliHamiltonian hamiltonian;
  double c_number = 0.0;
  double c_number_squared = 0.0;
  double lambda_before = 0.0;
  double lambda_after = 0.0;
};

/// H′ = H − c₁(N̂ − n) − c₂(N̂² − n²) with (c₁, c₂) minimizing λ(H′).
/// H′ acts as H on the n-particle sector. Throws DomainError when [H, N̂] ≠ 0.
SymmetryShift symmetry_shift(const PauliHamiltonian& h, std::size_t n_electrons, const ShiftOptions& options = {});

}  // namespace fq::qre
