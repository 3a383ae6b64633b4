#include "fq/guiding/sector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fq/error.hpp"
#include "fq/qre/mapping.hpp"

namespace fq::guiding {

namespace {

constexpr std::uint64_t kAlphaMask = 0x5555555555555555ULL;

std::size_t count_alpha(std::uint64_t d) { return static_cast<std::size_t>(std::popcount(d & kAlphaMask)); }
std::size_t count_beta(std::uint64_t d) { return static_cast<std::size_t>(std::popcount(d & ~kAlphaMask)); }

}  // namespace

Sector Sector::from_electrons(std::size_t n_spatial, std::size_t n_electrons, int ms2) {
  if (n_electrons > 2 * n_spatial) throw ValidationError("more electrons than spin orbitals");
  const long na2 = static_cast<long>(n_electrons) + ms2;
  if (na2 < 0 || na2 % 2 != 0 || na2 / 2 > static_cast<long>(n_electrons)) throw ValidationError("inconsistent spin projection");
  Sector s;
  s.n_qubits = 2 * n_spatial;
  s.n_alpha = static_cast<std::size_t>(na2 / 2);
  s.n_beta = n_electrons - s.n_alpha;
  if (s.n_alpha > n_spatial || s.n_beta > n_spatial) throw ValidationError("sector is empty");
  return s;
}

Sector Sector::of(const qre::FermionIntegrals& x) { return from_electrons(x.n_spatial(), x.n_electrons(), x.ms2()); }

bool Sector::contains(std::uint64_t d) const {
  if (n_qubits < 64 && (d >> n_qubits) != 0) return false;
  return count_alpha(d) == n_alpha && count_beta(d) == n_beta;
}

std::vector<std::uint64_t> Sector::basis() const {
  if (n_qubits > kMaxSpinOrbitals) throw ValidationError("sector basis limited to 16 spin orbitals");
  const std::size_t n_spatial = n_qubits / 2;
  if (n_alpha > n_spatial || n_beta > n_spatial) throw ValidationError("sector is empty");
  // Enumerate α and β occupation patterns separately, then interleave.
  auto patterns = [&](std::size_t k) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n_spatial); ++m)
      if (static_cast<std::size_t>(std::popcount(m)) == k) out.push_back(m);
    return out;
  };
  auto spread = [&](std::uint64_t m, int sigma) {
    std::uint64_t d = 0;
    for (std::size_t p = 0; p < n_spatial; ++p)
      if ((m >> p) & 1U) d |= std::uint64_t{1} << (2 * p + static_cast<std::size_t>(sigma));
    return d;
  };
  std::vector<std::uint64_t> out;
  for (auto a : patterns(n_alpha))
    for (auto b : patterns(n_beta)) out.push_back(spread(a, 0) | spread(b, 1));
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ValidationError("sector is empty");
  return out;
}

long CIVector::index_of(std::uint64_t det) const {
  auto it = std::lower_bound(basis.begin(), basis.end(), det);
  if (it == basis.end() || *it != det) return -1;
  return static_cast<long>(it - basis.begin());
}

Eigen::VectorXd CIVector::full_vector() const {
  if (sector.n_qubits > kMaxSpinOrbitals) throw ValidationError("register too large for a full vector");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::uint64_t{1} << sector.n_qubits));
  for (std::size_t i = 0; i < basis.size(); ++i) v(static_cast<Eigen::Index>(basis[i])) = amplitudes(static_cast<Eigen::Index>(i));
  return v;
}

SectorHamiltonian::SectorHamiltonian(const qre::PauliHamiltonian& h, const Sector& sector)
    : basis_(sector.basis()), offset_(h.offset()) {
  if (h.n_qubits() != sector.n_qubits) throw ValidationError("Hamiltonian and sector registers differ");
  std::unordered_map<std::uint64_t, Eigen::Index> where;
  for (std::size_t i = 0; i < basis_.size(); ++i) where[basis_[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t c = 0; c < basis_.size(); ++c) {
    const auto b = basis_[c];
    for (const auto& t : h.terms()) {
      auto it = where.find(b ^ t.pauli.x);
      if (it == where.end()) continue;
      const qre::cplx v = t.coeff * qre::pauli_phase(t.pauli, b);
      if (std::abs(v.imag()) > 1e-12) throw DomainError("sector Hamiltonian is not real");
      rows_.push_back(it->second);
      cols_.push_back(static_cast<Eigen::Index>(c));
      vals_.push_back(v.real());
    }
  }
}

void SectorHamiltonian::apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
  out = offset_ * in;
  for (std::size_t k = 0; k < vals_.size(); ++k) out(rows_[k]) += vals_[k] * in(cols_[k]);
}

Eigen::MatrixXd SectorHamiltonian::dense() const {
  const auto d = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) * offset_;
  for (std::size_t k = 0; k < vals_.size(); ++k) m(rows_[k], cols_[k]) += vals_[k];
  return m;
}

double SectorHamiltonian::expectation(const Eigen::VectorXd& v) const {
  Eigen::VectorXd hv;
  apply(v, hv);
  return v.dot(hv) / v.squaredNorm();
}

namespace {

constexpr double kDegenerateGap = 1e-8;

// Lowest two Ritz pairs by Lanczos with full reorthogonalization, restarted
// from the current Ritz vector.
std::pair<Eigen::VectorXd, Eigen::Vector2d> lanczos(const SectorHamiltonian& h) {
  const auto d = static_cast<Eigen::Index>(h.dim());
  const Eigen::Index m = std::min<Eigen::Index>(d, 120);
  Eigen::VectorXd start(d);
  for (Eigen::Index i = 0; i < d; ++i) start(i) = 1.0 + 1e-3 * std::sin(static_cast<double>(i) + 1.0);
  start.normalize();
  Eigen::VectorXd ritz = start;
  Eigen::Vector2d values(0.0, 0.0);
  for (int restart = 0; restart < 50; ++restart) {
    Eigen::MatrixXd q(d, m);
    q.col(0) = ritz.normalized();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    Eigen::Index used = m;
    Eigen::VectorXd w;
    for (Eigen::Index j = 0; j < m; ++j) {
      h.apply(q.col(j), w);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd proj = q.leftCols(j + 1).transpose() * w;
        w -= q.leftCols(j + 1) * proj;
        if (pass == 0) t.col(j).head(j + 1) += proj;
      }
      if (j + 1 == m) break;
      const double beta = w.norm();
      if (beta < 1e-12) {
        used = j + 1;
        break;
      }
      t(j + 1, j) = beta;
      q.col(j + 1) = w / beta;
    }
    const Eigen::MatrixXd tt = 0.5 * (t.topLeftCorner(used, used) + t.topLeftCorner(used, used).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tt);
    ritz = q.leftCols(used) * eig.eigenvectors().col(0);
    ritz.normalize();
    values(0) = eig.eigenvalues()(0);
    values(1) = used > 1 ? eig.eigenvalues()(1) : std::numeric_limits<double>::infinity();
    Eigen::VectorXd hr;
    h.apply(ritz, hr);
    if ((hr - values(0) * ritz).norm() < 1e-10) break;
  }
  return {ritz, values};
}

}  // namespace

GroundState exact_ground_state(const qre::PauliHamiltonian& h, const Sector& sector, const ExactOptions& options) {
  if (sector.n_qubits > kMaxSpinOrbitals) throw ValidationError("exact ground state limited to 16 spin orbitals");
  const SectorHamiltonian sh(h, sector);
  GroundState g;
  g.state.sector = sector;
  g.state.basis = sh.basis();
  if (sh.dim() <= options.dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sh.dense());
    g.energy = eig.eigenvalues()(0);
    g.state.amplitudes = eig.eigenvectors().col(0);
    g.gap = sh.dim() > 1 ? eig.eigenvalues()(1) - g.energy : std::numeric_limits<double>::infinity();
  } else {
    auto [vec, vals] = lanczos(sh);
    g.energy = vals(0);
    g.state.amplitudes = vec;
    g.gap = vals(1) - vals(0);
  }
  g.state.amplitudes.normalize();
  // Sign convention: largest amplitude positive.
  Eigen::Index arg = 0;
  g.state.amplitudes.cwiseAbs().maxCoeff(&arg);
  if (g.state.amplitudes(arg) < 0.0) g.state.amplitudes *= -1.0;
  Eigen::VectorXd hv;
  sh.apply(g.state.amplitudes, hv);
  g.residual = (hv - g.energy * g.state.amplitudes).norm();
  g.degenerate = g.gap < kDegenerateGap;
  return g;
}

GroundState exact_ground_state(const qre::FermionIntegrals& x, const ExactOptions& options) {
  if (2 * x.n_spatial() > kMaxSpinOrbitals) throw ValidationError("exact ground state limited to 16 spin orbitals");
  return exact_ground_state(qre::jordan_wigner(x), Sector::of(x), options);
}

}  // namespace fq::guiding
