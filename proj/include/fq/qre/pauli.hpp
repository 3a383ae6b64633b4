#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fq::qre {

using cplx = std::complex<double>;

/// Pauli string over up to 64 qubits, P = i^{|x∧z|} X^x Z^z (so a qubit with
/// both bits set carries Y).
struct PauliString {
  std::uint64_t x = 0;
  std::uint64_t z = 0;

  static PauliString single(char op, std::size_t qubit);
  bool is_identity() const { return (x | z) == 0; }
  std::size_t weight() const;
  char op(std::size_t qubit) const;
  /// "X0 Z3", or "I" for the identity.
  std::string to_string() const;

  auto operator<=>(const PauliString&) const = default;
};

/// a·b = i^phase · product; phase in {0,1,2,3}.
std::pair<int, PauliString> multiply(PauliString a, PauliString b);
bool commutes(PauliString a, PauliString b);
cplx i_pow(int k);

/// Pauli-string sum with complex coefficients, used for operator algebra.
class PauliSum {
 public:
  void add(PauliString p, cplx c);
  PauliSum operator*(const PauliSum& other) const;
  PauliSum operator+(const PauliSum& other) const;
  PauliSum operator*(cplx s) const;
  /// this·other − other·this
  PauliSum commutator(const PauliSum& other) const;
  void prune(double tol);
  double max_abs() const;
  const std::map<PauliString, cplx>& terms() const { return terms_; }

 private:
  std::map<PauliString, cplx> terms_;
};

struct PauliTerm {
  double coeff = 0.0;
  PauliString pauli;
};

/// H = offset·I + Σ_i h_i P_i with real h_i and unique non-identity strings.
class PauliHamiltonian {
 public:
  PauliHamiltonian() = default;
  explicit PauliHamiltonian(std::size_t n_qubits, double offset = 0.0);

  /// Real part of a Hermitian sum; imaginary parts above `tol` are rejected.
  static PauliHamiltonian from_sum(const PauliSum& sum, std::size_t n_qubits, double tol = 1e-10);

  void add(PauliString p, double c);
  /// Merges duplicates, drops |h| ≤ tol and sorts by string.
  void canonicalize(double tol = 0.0);

  std::size_t n_qubits() const { return n_qubits_; }
  double offset() const { return offset_; }
  void set_offset(double v) { offset_ = v; }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  PauliSum to_sum() const;

  /// Dense 2^n × 2^n matrix; qubit j is bit j of the basis index.
  Eigen::MatrixXcd dense() const;
  /// out = H·in on the full 2^n space.
  void apply(std::span<const cplx> in, std::span<cplx> out) const;

  /// One term per line, `<coeff> <op><index>…`; a `# n_qubits N` comment fixes the register size.
  std::string to_text() const;
  static PauliHamiltonian parse(const std::string& text, std::size_t n_qubits = 0);

 private:
  std::size_t n_qubits_ = 0;
  double offset_ = 0.0;
  std::vector<PauliTerm> terms_;
};

/// λ = Σ|h_i| over non-identity terms.
double pauli_weight_lambda(const PauliHamiltonian& h);

/// Action of one Pauli string on basis state |b⟩: P|b⟩ = phase·|b ⊕ x⟩.
inline cplx pauli_phase(PauliString p, std::uint64_t b) {
  int k = std::popcount(p.x & p.z) + 2 * (std::popcount(p.z & b) & 1);
  return i_pow(k);
}

PauliHamiltonian read_pauli_hamiltonian(const std::filesystem::path& path);
void write_pauli_hamiltonian(const PauliHamiltonian& h, const std::filesystem::path& path);

}  // namespace fq::qre
