#include "fq/qre/generators.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <vector>

#include "fq/error.hpp"

namespace fq::qre {

FermionIntegrals ppp_chain(const PppChainSpec& s) {
  if (s.n_sites < 1) throw ValidationError("chain needs at least one site");
  if (!(s.hubbard_u >= 0.0) || !(s.bond_length > 0.0) || !(s.ohno_kappa > 0.0)) throw ValidationError("invalid chain parameters");
  const std::size_t n = s.n_sites;
  const std::size_t ne = s.n_electrons == 0 ? n : s.n_electrons;
  FermionIntegrals x(n, ne, static_cast<int>(ne % 2));
  const auto ni = static_cast<Eigen::Index>(n);

  Eigen::MatrixXd hop = Eigen::MatrixXd::Zero(ni, ni);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double b = i % 2 == 0 ? s.beta_short : s.beta_long;
    hop(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = b;
    hop(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = b;
  }
  auto gamma = [&](std::size_t i, std::size_t j) {
    const double r = s.bond_length * std::abs(static_cast<double>(i) - static_cast<double>(j));
    const double ur = s.hubbard_u * r / s.ohno_kappa;
    return s.hubbard_u / std::sqrt(1.0 + ur * ur);
  };
  for (std::size_t i = 0; i < n; ++i) {
    double h = s.alpha;
    // Attraction to the unit core charges on the other sites.
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) h -= gamma(i, j);
    x.h(i, i) = h;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) x.h(i, j) = hop(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      x.set_g(i, i, j, j, gamma(i, j));
    }
    for (std::size_t j = i + 1; j < n; ++j) x.e_core += gamma(i, j);
  }
  if (s.orbitals == PppChainSpec::Orbitals::site) return x;
  Eigen::MatrixXd c;
  if (s.orbitals == PppChainSpec::Orbitals::huckel) {
    c = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x.one_body()).eigenvectors();
  } else {
    c = scf_orbitals(x);
  }
  // Fix the sign convention so the rotation is reproducible.
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    Eigen::Index arg = 0;
    c.col(k).cwiseAbs().maxCoeff(&arg);
    if (c(arg, k) < 0.0) c.col(k) *= -1.0;
  }
  return x.rotated(c);
}

Eigen::MatrixXd scf_orbitals(const FermionIntegrals& x, std::size_t max_iterations, double tol) {
  const std::size_t n = x.n_spatial();
  const auto ni = static_cast<Eigen::Index>(n);
  std::vector<double> occ(n, 0.0);
  for (std::size_t e = 0, p = 0; e < x.n_electrons(); ++p) {
    occ[p] = x.n_electrons() - e >= 2 ? 2.0 : 1.0;
    e += static_cast<std::size_t>(occ[p]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.one_body());
  Eigen::MatrixXd c = eig.eigenvectors();
  auto density = [&](const Eigen::MatrixXd& cc) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(ni, ni);
    for (std::size_t p = 0; p < n; ++p)
      if (occ[p] > 0.0) d += occ[p] * cc.col(static_cast<Eigen::Index>(p)) * cc.col(static_cast<Eigen::Index>(p)).transpose();
    return d;
  };
  Eigen::MatrixXd d = density(c);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Eigen::MatrixXd f = x.one_body();
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t t = 0; t < n; ++t) {
            acc += d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) * (x.g(p, q, r, t) - 0.5 * x.g(p, t, r, q));
          }
        f(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) += acc;
      }
    eig.compute(f);
    c = eig.eigenvectors();
    const Eigen::MatrixXd next = density(c);
    const double change = (next - d).cwiseAbs().maxCoeff();
    d = 0.5 * (d + next);
    if (change < tol) break;
  }
  return c;
}

FermionIntegrals random_integrals(std::size_t n, std::size_t n_electrons, std::uint64_t seed, double scale) {
  FermionIntegrals x(n, n_electrons, static_cast<int>(n_electrons % 2));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q <= p; ++q) {
      const double v = u(rng);
      x.h(p, q) = v;
      x.h(q, p) = v;
    }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q <= p; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s <= r; ++s) {
          if (p * (p + 1) / 2 + q < r * (r + 1) / 2 + s) continue;
          x.set_g(p, q, r, s, u(rng));
        }
  x.e_core = u(rng);
  return x;
}

}  // namespace fq::qre
