#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "fq/qre/integrals.hpp"
#include "fq/qre/pauli.hpp"

namespace fq::guiding {

/// Largest spin-orbital register handled by exact diagonalization.
inline constexpr std::size_t kMaxSpinOrbitals = 16;

/// Fixed particle number and S_z; spin orbital (p, σ) is qubit 2p + σ.
struct Sector {
  std::size_t n_qubits = 0;
  std::size_t n_alpha = 0;
  std::size_t n_beta = 0;

  static Sector from_electrons(std::size_t n_spatial, std::size_t n_electrons, int ms2 = 0);
  static Sector of(const qre::FermionIntegrals& integrals);
  bool contains(std::uint64_t det) const;
  /// Occupation bit strings in increasing numeric order.
  std::vector<std::uint64_t> basis() const;
};

/// Amplitudes over the determinants of a sector.
struct CIVector {
  Sector sector;
  std::vector<std::uint64_t> basis;
  Eigen::VectorXd amplitudes;

  double norm() const { return amplitudes.norm(); }
  /// Position of a determinant, or −1 when it is outside the basis.
  long index_of(std::uint64_t det) const;
  /// Amplitudes embedded in the full 2^n register.
  Eigen::VectorXd full_vector() const;
};

struct GroundState {
  double energy = 0.0;
  CIVector state;
  double residual = 0.0;
  double gap = 0.0;
  bool degenerate = false;
};

/// Hamiltonian restricted to a sector, as a dense or sparse real matrix.
class SectorHamiltonian {
 public:
  SectorHamiltonian(const qre::PauliHamiltonian& h, const Sector& sector);

  std::size_t dim() const { return basis_.size(); }
  const std::vector<std::uint64_t>& basis() const { return basis_; }
  void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const;
  Eigen::MatrixXd dense() const;
  double expectation(const Eigen::VectorXd& v) const;

 private:
  std::vector<std::uint64_t> basis_;
  double offset_ = 0.0;
  // Off-diagonal and diagonal entries in coordinate form.
  std::vector<Eigen::Index> rows_, cols_;
  std::vector<double> vals_;
};

struct ExactOptions {
  /// Dense diagonalization up to this many determinants, Lanczos beyond.
  std::size_t dense_limit = 1500;
};

/// Lowest eigenpair in the sector. The Lanczos path uses full
/// reorthogonalization and restarts until the residual is below 1e-10.
GroundState exact_ground_state(const qre::PauliHamiltonian& h, const Sector& sector, const ExactOptions& options = {});
GroundState exact_ground_state(const qre::FermionIntegrals& integrals, const ExactOptions& options = {});

}  // namespace fq::guiding
