#include "fq/qre/estimate.hpp"

#include <fstream>

#include "fq/error.hpp"
#include "fq/qre/mapping.hpp"

namespace fq::qre {

namespace {

bool looks_like_fcidump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string word;
  in >> word;
  return word.rfind("&FCI", 0) == 0;
}

}  // namespace

nlohmann::json estimate_resources(const EstimateRequest& request) {
  request.constants.validate();
  if (!(request.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  const std::string method = request.method == "randomized_trotter" ? "trotter" : request.method;
  if (method != "qdrift" && method != "trotter" && method != "qubitization") {
    throw ValidationError("unknown method '" + request.method + "' (qdrift, trotter, qubitization)");
  }
  const bool fcidump = looks_like_fcidump(request.hamiltonian);
  std::optional<FermionIntegrals> integrals;
  if (fcidump) integrals = parse_fcidump(request.hamiltonian);
  if (method == "qubitization" && !integrals) throw ValidationError("qubitization needs an FCIDUMP input");

  nlohmann::json out;
  CostReport report;
  if (method == "qubitization") {
    const auto df = double_factorize(*integrals, request.df_threshold);
    report = qubitization_cost(df, request.epsilon, request.constants);
    out["n_qubits"] = system_qubits(integrals->n_spatial());
    out["lambda"] = df.lambda();
  } else {
    PauliHamiltonian h = integrals ? jordan_wigner(*integrals) : read_pauli_hamiltonian(request.hamiltonian);
    const double before = pauli_weight_lambda(h);
    const auto ne = integrals ? std::optional<std::size_t>(integrals->n_electrons()) : request.n_electrons;
    if (request.symmetry_shift && ne) h = symmetry_shift(h, *ne).hamiltonian;
    const double lambda = pauli_weight_lambda(h);
    out["n_qubits"] = h.n_qubits();
    out["lambda"] = before;
    out["lambda_shifted"] = lambda;
    report = method == "qdrift"
                 ? qdrift_cost(lambda, h.n_qubits(), request.epsilon, request.eta, request.constants)
                 : randomized_trotter_cost(h, request.trotter_model, request.epsilon, request.eta, request.constants);
  }
  out["method"] = report.method;
  out["report"] = report.to_json();
  if (request.profile) {
    const auto rt = runtime_estimate(report, *request.profile, request.constants);
    out["runtime"] = {{"wall_seconds", rt.wall_seconds}, {"required_gate_error", rt.required_gate_error}};
  }
  return out;
}

}  // namespace fq::qre
