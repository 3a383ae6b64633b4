#include "fq/qre/cost.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fq/error.hpp"

namespace fq::qre {

void HardwareProfile::validate() const {
  if (!(gate_time > 0.0) || !(gate_error > 0.0) || logical_qubits == 0 || parallel_factor == 0) {
    throw ValidationError("hardware profile values must be positive");
  }
}

HardwareProfile HardwareProfile::from_json(const nlohmann::json& j) {
  HardwareProfile p;
  p.gate_time = j.value("gate_time", p.gate_time);
  p.gate_error = j.value("gate_error", p.gate_error);
  p.logical_qubits = j.value("logical_qubits", p.logical_qubits);
  p.parallel_factor = j.value("parallel_factor", p.parallel_factor);
  p.validate();
  return p;
}

HardwareProfile HardwareProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open hardware profile " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("hardware profile " + path.string() + ": " + e.what());
  }
}

void CostConstants::validate() const {
  if (!(rotation_cost > 0.0) || hwp_group == 0 || !(qpe_fraction > 0.0 && qpe_fraction < 1.0) || !(xi_floor > 0.0) ||
      !(toffoli_per_orbital >= 0.0) || !(toffoli_per_rank >= 0.0) || !(circuit_error_budget > 0.0)) {
    throw ValidationError("invalid cost-model constants");
  }
}

nlohmann::json CostReport::to_json() const {
  return {{"method", method},
          {"max_gates_per_circuit", max_gates_per_circuit},
          {"total_gates", total_gates},
          {"system_qubits", system_qubits},
          {"ancilla_qubits", ancilla_qubits},
          {"total_qubits", total_qubits()},
          {"circuits_count", circuits_count},
          {"assumptions", assumptions}};
}

double hwp_group_cost(std::size_t w, const CostConstants& k) {
  if (w == 0) throw ValidationError("phasing group length must be positive");
  const double toffolis = static_cast<double>(w - static_cast<std::size_t>(std::popcount(w)));
  const double rotations = static_cast<double>(std::bit_width(w));
  return toffolis + rotations * k.rotation_cost;
}

namespace {

std::size_t hwp_ancillas(std::size_t w) { return w > 1 ? w : 0; }

double channel_cost(double invocations, const CostConstants& k) {
  if (invocations <= 0.0) return 0.0;
  return std::ceil(invocations / static_cast<double>(k.hwp_group)) * hwp_group_cost(k.hwp_group, k);
}

double qdrift_invocations(double lambda, double t_max, double eps_mix) {
  if (lambda <= 0.0) return 0.0;
  return std::ceil(2.0 * lambda * lambda * t_max * t_max / eps_mix);
}

void check_accuracy(double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("target accuracy must be positive");
}

}  // namespace

CircuitSplit circuit_split(double epsilon, double eta, const CostConstants& k) {
  check_accuracy(epsilon);
  CircuitSplit s;
  s.xi = xi_from_overlap(eta);
  s.xi_eff = std::max(s.xi, k.xi_floor);
  s.t_max = s.xi_eff / (k.qpe_fraction * epsilon);
  const double ratio = 0.5 * std::numbers::pi / s.xi_eff;
  s.circuits = std::max(1.0, std::ceil(ratio * ratio - 1e-9));
  return s;
}

CostReport qdrift_cost(double lambda, std::size_t n_qubits, double epsilon, double eta, const CostConstants& k) {
  k.validate();
  if (!(lambda >= 0.0)) throw ValidationError("λ must be non-negative");
  const auto split = circuit_split(epsilon, eta, k);
  const double eps_mix = (1.0 - k.qpe_fraction) * epsilon;
  const double n_ch = qdrift_invocations(lambda, split.t_max, eps_mix);
  CostReport r;
  r.method = "qdrift";
  r.max_gates_per_circuit = channel_cost(n_ch, k);
  r.circuits_count = split.circuits;
  r.total_gates = r.max_gates_per_circuit * r.circuits_count;
  r.system_qubits = n_qubits;
  r.ancilla_qubits = hwp_ancillas(k.hwp_group);
  r.assumptions = {{"epsilon", epsilon}, {"lambda", lambda},       {"eta", eta},
                   {"xi", split.xi},     {"xi_eff", split.xi_eff}, {"t_max", split.t_max},
                   {"hwp_w", k.hwp_group}, {"epsilon_mix", eps_mix}, {"channel_invocations", n_ch}};
  return r;
}

CostReport randomized_trotter_cost(const PauliHamiltonian& h, const TrotterErrorModel& model, double epsilon, double eta,
                                   const CostConstants& k, const RandomizedTrotterOptions& options) {
  k.validate();
  if (h.terms().empty()) throw ValidationError("Hamiltonian has no terms to simulate");
  if (!(model.c > 0.0)) throw ValidationError("Trotter model prefactor must be positive");
  const auto split = circuit_split(epsilon, eta, k);
  const double eps_sim = (1.0 - k.qpe_fraction) * epsilon;

  std::vector<double> mags;
  for (const auto& t : h.terms()) mags.push_back(std::abs(t.coeff));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  std::vector<double> prefix(mags.size() + 1, 0.0);
  for (std::size_t i = 0; i < mags.size(); ++i) prefix[i + 1] = prefix[i] + mags[i];
  const double lambda = prefix.back();
  const std::size_t L = mags.size();

  struct Eval {
    std::size_t k_det;
    double lambda_det, step, steps, step_cost, random_cost, invocations, per_circuit;
  };
  auto evaluate = [&](std::size_t kd) {
    Eval e{kd, prefix[kd], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const bool det = kd > 0;
    const bool rnd = kd < L;
    const double eps_t = det && rnd ? 0.5 * eps_sim : eps_sim;
    const double eps_mix = det && rnd ? 0.5 * eps_sim : eps_sim;
    if (det) {
      e.step = std::sqrt(eps_t / model.constant(e.lambda_det));
      e.steps = std::max(1.0, std::ceil(split.t_max / e.step));
      e.step_cost = 2.0 * std::ceil(static_cast<double>(kd) / static_cast<double>(k.hwp_group)) * hwp_group_cost(k.hwp_group, k);
    }
    if (rnd) {
      e.invocations = qdrift_invocations(lambda - e.lambda_det, split.t_max, eps_mix);
      e.random_cost = channel_cost(e.invocations, k);
    }
    e.per_circuit = e.steps * e.step_cost + e.random_cost;
    return e;
  };

  Eval best{};
  if (options.n_deterministic) {
    if (*options.n_deterministic > L) throw ValidationError("deterministic term count exceeds the Hamiltonian");
    best = evaluate(*options.n_deterministic);
  } else {
    best = evaluate(0);
    for (std::size_t kd = 1; kd <= L; ++kd) {
      const auto e = evaluate(kd);
      if (e.per_circuit < best.per_circuit) best = e;
    }
  }

  CostReport r;
  r.method = "randomized_trotter";
  r.max_gates_per_circuit = best.per_circuit;
  r.circuits_count = split.circuits;
  r.total_gates = best.per_circuit * split.circuits;
  r.system_qubits = h.n_qubits();
  r.ancilla_qubits = hwp_ancillas(k.hwp_group);
  r.assumptions = {{"epsilon", epsilon},
                   {"lambda", lambda},
                   {"eta", eta},
                   {"xi", split.xi},
                   {"xi_eff", split.xi_eff},
                   {"t_max", split.t_max},
                   {"hwp_w", k.hwp_group},
                   {"n_terms", L},
                   {"n_deterministic", best.k_det},
                   {"lambda_deterministic", best.lambda_det},
                   {"trotter_c", model.c},
                   {"trotter_alpha", model.alpha},
                   {"step_size", best.step},
                   {"trotter_steps", best.steps},
                   {"deterministic_gates", best.steps * best.step_cost},
                   {"randomized_gates", best.random_cost},
                   {"channel_invocations", best.invocations}};
  return r;
}

std::size_t DoubleFactorization::total_rank() const {
  std::size_t s = 0;
  for (const auto& l : leaves) s += l.rank;
  return s;
}

double DoubleFactorization::lambda() const {
  double two = 0.0;
  for (const auto& l : leaves) {
    const double m = l.mu.cwiseAbs().sum();
    two += std::abs(l.eigenvalue) * m * m;
  }
  return lambda_one_body + 0.25 * two;
}

DoubleFactorization double_factorize(const FermionIntegrals& x, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError("factorization threshold must be non-negative");
  try {
    x.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("double factorization needs symmetric integrals: ") + e.what());
  }
  const std::size_t n = x.n_spatial();
  const auto ni = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd v = x.supermatrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
  if (eig.info() != Eigen::Success) throw DomainError("supermatrix eigendecomposition failed");

  DoubleFactorization df;
  df.n_spatial = n;
  df.threshold = threshold;
  Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  for (Eigen::Index l = v.rows() - 1; l >= 0; --l) {
    const double lam = eig.eigenvalues()(l);
    if (std::abs(lam) <= threshold) {
      df.error_bound += std::abs(lam);
      continue;
    }
    const Eigen::VectorXd vec = eig.eigenvectors().col(l);
    recon += lam * vec * vec.transpose();
    DfLeaf leaf;
    leaf.eigenvalue = lam;
    leaf.one_body = Eigen::Map<const Eigen::MatrixXd>(vec.data(), ni, ni).transpose();
    leaf.one_body = 0.5 * (leaf.one_body + leaf.one_body.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> second(leaf.one_body, Eigen::EigenvaluesOnly);
    leaf.mu = second.eigenvalues();
    const double cut = 1e-10 * std::max(1.0, leaf.mu.cwiseAbs().maxCoeff());
    leaf.rank = static_cast<std::size_t>((leaf.mu.array().abs() > cut).count());
    df.leaves.push_back(std::move(leaf));
  }
  df.reconstruction_error = (v - recon).cwiseAbs().maxCoeff();

  Eigen::MatrixXd t = x.one_body();
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t r = 0; r < n; ++r) {
        t(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) += -0.5 * x.g(p, r, r, q) + x.g(p, q, r, r);
      }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> te(t, Eigen::EigenvaluesOnly);
  df.lambda_one_body = te.eigenvalues().cwiseAbs().sum();
  return df;
}

CostReport qubitization_cost(const DoubleFactorization& df, double epsilon, const CostConstants& k) {
  k.validate();
  check_accuracy(epsilon);
  if (df.leaves.empty()) throw ValidationError("double factorization has no leaves");
  const double lambda_df = df.lambda();
  const double queries = std::ceil(std::numbers::pi * lambda_df / (2.0 * epsilon));
  const double rank = static_cast<double>(df.total_rank());
  const double per_query = k.toffoli_per_orbital * static_cast<double>(df.n_spatial) + k.toffoli_per_rank * rank;
  auto bits = [](double count) { return static_cast<std::size_t>(std::bit_width(static_cast<std::uint64_t>(std::max(1.0, count)))); };

  CostReport r;
  r.method = "qubitization";
  r.max_gates_per_circuit = queries * per_query;
  r.total_gates = r.max_gates_per_circuit;
  r.circuits_count = 1.0;
  r.system_qubits = system_qubits(df.n_spatial);
  r.ancilla_qubits = df.n_spatial * k.rotation_bits + bits(static_cast<double>(df.leaves.size())) + bits(rank) + bits(queries);
  r.assumptions = {{"epsilon", epsilon},
                   {"lambda_df", lambda_df},
                   {"lambda_one_body", df.lambda_one_body},
                   {"df_threshold", df.threshold},
                   {"leaves", df.leaves.size()},
                   {"total_rank", df.total_rank()},
                   {"queries", queries},
                   {"toffoli_per_query", per_query},
                   {"a", k.toffoli_per_orbital},
                   {"b", k.toffoli_per_rank}};
  return r;
}

RuntimeEstimate runtime_estimate(const CostReport& report, const HardwareProfile& profile, const CostConstants& k) {
  profile.validate();
  const double lanes = std::max(1.0, std::min(static_cast<double>(profile.parallel_factor), report.circuits_count));
  RuntimeEstimate e;
  e.wall_seconds = report.total_gates * profile.gate_time / lanes;
  e.required_gate_error = report.max_gates_per_circuit > 0.0 ? k.circuit_error_budget / report.max_gates_per_circuit : 1.0;
  return e;
}

}  // namespace fq::qre
