#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fq/qre/pauli.hpp"

namespace fq::qre {

/// Largest register handled by the dense Trotter-error path.
inline constexpr std::size_t kDenseTrotterQubits = 10;

/// ε(δ) = ‖e^{−iHt} − S₂(δ)^{t/δ}‖₂ / t with S₂ the symmetric second-order
/// product formula over the canonical term order. The step is adjusted to
/// t/r with r = round(t/δ) ≥ 1. Error per unit evolution time.
double trotter_error_exact(const PauliHamiltonian& h, double delta, double evolution_time = 1.0);

/// C = ε(δ)/δ² at a single step size.
double trotter_constant_exact(const PauliHamiltonian& h, double delta, double evolution_time = 1.0);

/// Power law C^{1/2} = c·λ^α.
struct TrotterErrorModel {
  double c = 0.0;
  double alpha = 0.0;
  /// RMS residual of the log-log fit.
  double residual = 0.0;

  double constant(double lambda) const;
};

/// Least squares on (ln λ, ½ ln C).
TrotterErrorModel fit_trotter_constant(std::span<const std::pair<double, double>> points);

/// ξ = arcsin((1 − η)/η) for η ∈ [½, 1].
double xi_from_overlap(double eta);

}  // namespace fq::qre
