#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fq/guiding/sector.hpp"

namespace fq::guiding {

struct OverlapResult {
  std::string method;  ///< HF | SOS | MPS
  std::size_t param = 0;  ///< k for SOS, χ for MPS, 0 for HF
  double eta = 0.0;
};

/// Lowest orbitals doubly occupied, remaining α (or β) electrons above.
std::uint64_t hartree_fock_determinant(const Sector& sector);

/// η = |c_HF|.
OverlapResult hartree_fock_overlap(const CIVector& ci, std::uint64_t hf_determinant);

/// Indices of the k largest |c_i|, ties resolved toward the lower basis state.
std::vector<std::size_t> top_determinants(const CIVector& ci, std::size_t k);

/// η = sqrt(Σ_top-k |c_i|²).
OverlapResult sum_of_slater(const CIVector& ci, std::size_t k);

/// Open-boundary MPS over qubit sites; site j holds A_j[s] (χ_{j} × χ_{j+1}), s ∈ {0, 1}.
struct MpsState {
  std::vector<std::array<Eigen::MatrixXd, 2>> sites;

  std::size_t n_sites() const { return sites.size(); }
  /// χ_j for bonds 1..n−1.
  std::vector<std::size_t> bond_dims() const;
  std::size_t max_bond() const;
  /// Contraction into the full 2^n vector (qubit j = bit j).
  Eigen::VectorXd to_vector() const;
};

/// Exact MPS by sequential SVD, left canonical.
MpsState ci_to_mps(const CIVector& ci);
/// Right-to-left SVD sweep keeping the χ largest singular values per bond; normalized.
MpsState truncate_mps(const MpsState& mps, std::size_t chi);
/// η = |⟨mps|ci⟩| / ‖mps‖.
OverlapResult mps_overlap(const MpsState& mps, const CIVector& ci, std::size_t chi_label = 0);

}  // namespace fq::guiding
