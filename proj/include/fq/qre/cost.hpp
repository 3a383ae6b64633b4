#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fq/qre/integrals.hpp"
#include "fq/qre/pauli.hpp"
#include "fq/qre/trotter.hpp"

namespace fq::qre {

/// Target accuracies (Hartree) used for the per-circuit and total gate tables.
namespace presets {
inline constexpr double kAccuracyPerCircuit = 1e-3;
inline constexpr double kAccuracyTotal = 1.6e-3;
}  // namespace presets

struct HardwareProfile {
  double gate_time = 1e-7;  ///< seconds per logical gate
  double gate_error = 1e-7;
  std::size_t logical_qubits = 1000;
  std::size_t parallel_factor = 1;

  void validate() const;
  static HardwareProfile from_json(const nlohmann::json& j);
  static HardwareProfile load(const std::filesystem::path& path);
};

/// Named constants of the cost models. Gate counts are in non-Clifford
/// (Toffoli-equivalent) units; Clifford gates are free.
struct CostConstants {
  /// Cost of synthesizing one arbitrary-angle single-qubit rotation.
  double rotation_cost = 40.0;
  /// Hamming-weight phasing group length w; 1 switches phasing off (no ancillas).
  std::size_t hwp_group = 6;
  /// Fraction of ε given to phase estimation; the rest bounds simulation error.
  double qpe_fraction = 0.5;
  /// ξ is floored here so η → 1 keeps a finite circuit count.
  double xi_floor = 1e-2;
  /// Qubitization per-query model a·N + b·Σρ_ℓ (simplified stand-in).
  double toffoli_per_orbital = 16.0;
  double toffoli_per_rank = 4.0;
  /// Bits per rotation angle in the qubitization data-loading register.
  std::size_t rotation_bits = 16;
  /// Tolerated total error per circuit when deriving gate-error requirements.
  double circuit_error_budget = 0.1;

  void validate() const;
};

struct CostReport {
  std::string method;  ///< qdrift | randomized_trotter | qubitization
  double max_gates_per_circuit = 0.0;
  double total_gates = 0.0;
  std::size_t system_qubits = 0;
  std::size_t ancilla_qubits = 0;
  double circuits_count = 1.0;
  /// ε, λ, η, ξ, t_max, w and method-specific inputs.
  nlohmann::json assumptions = nlohmann::json::object();

  std::size_t total_qubits() const { return system_qubits + ancilla_qubits; }
  nlohmann::json to_json() const;
};

/// 2N qubits for N spatial orbitals.
inline std::size_t system_qubits(std::size_t n_spatial) { return 2 * n_spatial; }

/// Cost of one group of w equal-angle rotations with Hamming-weight phasing:
/// (w − popcount(w)) Toffolis plus (⌊log₂ w⌋ + 1) rotations.
double hwp_group_cost(std::size_t w, const CostConstants& k);

/// Circuit-splitting schedule derived from the overlap.
///   ξ_eff = max(ξ(η), ξ_floor), t_max = ξ_eff/ε_qpe, circuits = ⌈(π/2)²/ξ_eff²⌉.
/// Larger overlap gives shorter circuits and more of them.
struct CircuitSplit {
  double xi = 0.0;
  double xi_eff = 0.0;
  double t_max = 0.0;
  double circuits = 1.0;
};
CircuitSplit circuit_split(double epsilon, double eta, const CostConstants& k);

/// qDRIFT: N_ch = ⌈2λ²t_max²/ε_mix⌉ channel invocations per circuit with
/// ε_mix = (1 − qpe_fraction)·ε, applied in Hamming-weight-phasing groups.
CostReport qdrift_cost(double lambda, std::size_t n_qubits, double epsilon, double eta, const CostConstants& k = {});

struct RandomizedTrotterOptions {
  /// Number of largest-|h| terms treated deterministically; swept when empty.
  std::optional<std::size_t> n_deterministic;
};

/// Partially randomized second-order Trotter. The k largest terms run as a
/// product formula with δ = √(ε_T/C(λ_det)), r = ⌈t_max/δ⌉ steps of
/// 2⌈k/w⌉ phasing groups each; the remainder is a qDRIFT channel of weight
/// λ − λ_det. The simulation budget is halved between the two parts when both
/// are present. k minimizes total gates unless fixed in `options`.
CostReport randomized_trotter_cost(const PauliHamiltonian& h, const TrotterErrorModel& model, double epsilon, double eta,
                                   const CostConstants& k = {}, const RandomizedTrotterOptions& options = {});

struct DfLeaf {
  double eigenvalue = 0.0;
  Eigen::MatrixXd one_body;  ///< N × N, unit Frobenius norm
  Eigen::VectorXd mu;        ///< eigenvalues of one_body
  std::size_t rank = 0;
};

struct DoubleFactorization {
  std::size_t n_spatial = 0;
  double threshold = 0.0;
  std::vector<DfLeaf> leaves;
  /// max |g − Σ_ℓ λ_ℓ L_ℓ ⊗ L_ℓ|
  double reconstruction_error = 0.0;
  /// Σ of discarded |λ_ℓ|; bounds the reconstruction error and shrinks as τ → 0.
  double error_bound = 0.0;
  /// One-body norm Σ|eig(h − ½Σ_r(pr|rq) + Σ_r(pq|rr))|.
  double lambda_one_body = 0.0;

  std::size_t total_rank() const;
  /// λ_DF = λ_one-body + ¼ Σ_ℓ |λ_ℓ| (Σ_k |μ_ℓk|)².
  double lambda() const;
};

/// First level: eigendecomposition of the N²×N² supermatrix, keeping |λ_ℓ| > τ.
/// Second level: eigendecomposition of each leaf matrix.
DoubleFactorization double_factorize(const FermionIntegrals& integrals, double threshold);

/// Q = ⌈π·λ_DF/(2ε)⌉ queries at a·N + b·Σρ_ℓ each, one circuit. Ancillas:
/// N·rotation_bits data-loading bits plus leaf, rank and phase index registers.
CostReport qubitization_cost(const DoubleFactorization& df, double epsilon, const CostConstants& k = {});

struct RuntimeEstimate {
  double wall_seconds = 0.0;
  double required_gate_error = 0.0;
};

/// wall = total_gates·gate_time / min(parallel_factor, circuits);
/// required gate error = circuit_error_budget / max_gates_per_circuit.
RuntimeEstimate runtime_estimate(const CostReport& report, const HardwareProfile& profile, const CostConstants& k = {});

}  // namespace fq::qre
