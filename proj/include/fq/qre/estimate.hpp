#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fq/qre/cost.hpp"

namespace fq::qre {

struct EstimateRequest {
  /// FCIDUMP (detected by its &FCI header) or Pauli text.
  std::filesystem::path hamiltonian;
  std::string method = "qdrift";  ///< qdrift | trotter | qubitization
  double epsilon = presets::kAccuracyPerCircuit;
  double eta = 1.0;
  std::optional<HardwareProfile> profile;
  /// Electron count for the symmetry shift of Pauli input (FCIDUMP carries its own).
  std::optional<std::size_t> n_electrons;
  bool symmetry_shift = true;
  double df_threshold = 1e-6;
  /// Trotter-constant power law; the default is the published fit C^{1/2} = 1.08e-4·λ^1.25.
  TrotterErrorModel trotter_model{1.08e-4, 1.25, 0.0};
  CostConstants constants;
};

/// Loads the Hamiltonian, applies the requested method and returns
/// {method, n_qubits, lambda, lambda_shifted, report, runtime?}.
nlohmann::json estimate_resources(const EstimateRequest& request);

}  // namespace fq::qre
