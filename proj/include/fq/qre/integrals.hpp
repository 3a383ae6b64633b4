#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fq::qre {

/// Active-space Hamiltonian in spatial orbitals.
///
/// H = e_core + Σ_pq h_pq a†_pσ a_qσ + ½ Σ_pqrs (pq|rs) a†_pσ a†_rτ a_sτ a_qσ
/// with two-electron integrals in chemist notation.
class FermionIntegrals {
 public:
  FermionIntegrals() = default;
  FermionIntegrals(std::size_t n_spatial, std::size_t n_electrons, int ms2 = 0);

  std::size_t n_spatial() const { return n_; }
  std::size_t n_electrons() const { return n_electrons_; }
  int ms2() const { return ms2_; }

  double& h(std::size_t p, std::size_t q) { return h_(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)); }
  double h(std::size_t p, std::size_t q) const { return h_(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)); }
  const Eigen::MatrixXd& one_body() const { return h_; }

  double g(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const { return g_[index(p, q, r, s)]; }
  /// Sets (pq|rs) together with its 8 symmetric images.
  void set_g(std::size_t p, std::size_t q, std::size_t r, std::size_t s, double value);
  /// Raw access to one element, without symmetrization.
  double& g_raw(std::size_t p, std::size_t q, std::size_t r, std::size_t s) { return g_[index(p, q, r, s)]; }
  const std::vector<double>& two_body() const { return g_; }

  double e_core = 0.0;

  /// Throws when h is not symmetric or g breaks the 8-fold symmetry beyond `tol`.
  void validate(double tol = 1e-10) const;

  /// (pq|rs) viewed as an N²×N² matrix with row pq and column rs.
  Eigen::MatrixXd supermatrix() const;

  /// h ← Cᵀ h C, (pq|rs) ← Σ C_ap C_bq C_cr C_ds (ab|cd).
  FermionIntegrals rotated(const Eigen::MatrixXd& c) const;

 private:
  std::size_t index(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const {
    return ((p * n_ + q) * n_ + r) * n_ + s;
  }

  std::size_t n_ = 0;
  std::size_t n_electrons_ = 0;
  int ms2_ = 0;
  Eigen::MatrixXd h_;
  std::vector<double> g_;
};

FermionIntegrals parse_fcidump(const std::filesystem::path& path);
FermionIntegrals parse_fcidump_string(const std::string& text);
/// Writes the symmetry-unique entries with round-trip precision.
void write_fcidump(const FermionIntegrals& integrals, const std::filesystem::path& path);
std::string format_fcidump(const FermionIntegrals& integrals);

}  // namespace fq::qre
