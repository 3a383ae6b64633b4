#include "fq/qre/trotter.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "fq/error.hpp"

namespace fq::qre {

namespace {

// M ← exp(−iθP)·M = cos θ·M − i sin θ·P·M
void apply_rotation(Eigen::MatrixXcd& m, PauliString p, double theta) {
  const double c = std::cos(theta);
  const cplx s{0.0, -std::sin(theta)};
  const auto dim = static_cast<std::uint64_t>(m.rows());
  Eigen::MatrixXcd pm(m.rows(), m.cols());
  for (std::uint64_t b = 0; b < dim; ++b) {
    pm.row(static_cast<Eigen::Index>(b ^ p.x)) = pauli_phase(p, b) * m.row(static_cast<Eigen::Index>(b));
  }
  m = c * m + s * pm;
}

}  // namespace

double trotter_error_exact(const PauliHamiltonian& h, double delta, double t) {
  if (h.n_qubits() > kDenseTrotterQubits) {
    throw ValidationError("exact Trotter error is limited to 10 qubits; use the fitted power-law model");
  }
  if (!(delta > 0.0) || !(t > 0.0)) throw ValidationError("step size and evolution time must be positive");
  const auto r = std::max<long long>(1, std::llround(t / delta));
  const double step = t / static_cast<double>(r);
  const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << h.n_qubits());

  // The identity offset only adds a global phase, identical on both sides.
  PauliHamiltonian traceless(h.n_qubits());
  for (const auto& term : h.terms()) traceless.add(term.pauli, term.coeff);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(traceless.dense());
  const Eigen::VectorXcd phases = (eig.eigenvalues().cast<cplx>() * cplx{0.0, -t}).array().exp();
  const Eigen::MatrixXcd exact = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();

  Eigen::MatrixXcd s2 = Eigen::MatrixXcd::Identity(dim, dim);
  const auto& terms = h.terms();
  for (const auto& term : terms) apply_rotation(s2, term.pauli, 0.5 * step * term.coeff);
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) apply_rotation(s2, it->pauli, 0.5 * step * it->coeff);

  Eigen::MatrixXcd product = Eigen::MatrixXcd::Identity(dim, dim);
  Eigen::MatrixXcd base = s2;
  for (auto k = r; k > 0; k >>= 1) {
    if (k & 1) product = product * base;
    if (k > 1) base = base * base;
  }
  const Eigen::MatrixXcd diff = exact - product;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sv(diff.adjoint() * diff, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, sv.eigenvalues().maxCoeff())) / t;
}

double trotter_constant_exact(const PauliHamiltonian& h, double delta, double t) {
  return trotter_error_exact(h, delta, t) / (delta * delta);
}

double TrotterErrorModel::constant(double lambda) const {
  const double root = c * std::pow(lambda, alpha);
  return root * root;
}

TrotterErrorModel fit_trotter_constant(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw ValidationError("power-law fit needs at least two points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [lambda, cst] = points[static_cast<std::size_t>(i)];
    if (!(lambda > 0.0) || !(cst > 0.0)) throw ValidationError("power-law fit needs positive λ and C");
    a(i, 0) = 1.0;
    a(i, 1) = std::log(lambda);
    y(i) = 0.5 * std::log(cst);
  }
  if ((a.col(1).array() - a(0, 1)).abs().maxCoeff() == 0.0) throw ValidationError("power-law fit needs distinct λ values");
  const Eigen::Vector2d beta = a.colPivHouseholderQr().solve(y);
  TrotterErrorModel out;
  out.c = std::exp(beta(0));
  out.alpha = beta(1);
  out.residual = std::sqrt((a * beta - y).squaredNorm() / static_cast<double>(n));
  return out;
}

double xi_from_overlap(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("overlap must lie in (0, 1]");
  if (eta < 0.5) throw DomainError("overlap too small for this formula (needs η ≥ 1/2)");
  return std::asin((1.0 - eta) / eta);
}

}  // namespace fq::qre
