#include "fq/guiding/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "fq/error.hpp"

namespace fq::guiding {

std::uint64_t hartree_fock_determinant(const Sector& s) {
  std::uint64_t d = 0;
  for (std::size_t p = 0; p < s.n_alpha; ++p) d |= std::uint64_t{1} << (2 * p);
  for (std::size_t p = 0; p < s.n_beta; ++p) d |= std::uint64_t{1} << (2 * p + 1);
  return d;
}

OverlapResult hartree_fock_overlap(const CIVector& ci, std::uint64_t hf) {
  if (!ci.sector.contains(hf)) throw ValidationError("reference determinant lies outside the sector");
  const long i = ci.index_of(hf);
  if (i < 0) throw ValidationError("reference determinant is not in the CI basis");
  return {"HF", 0, std::min(1.0, std::abs(ci.amplitudes(i)) / ci.norm())};
}

std::vector<std::size_t> top_determinants(const CIVector& ci, std::size_t k) {
  std::vector<std::size_t> order(ci.basis.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(ci.amplitudes(static_cast<Eigen::Index>(a))) > std::abs(ci.amplitudes(static_cast<Eigen::Index>(b)));
  });
  order.resize(std::min(k, order.size()));
  return order;
}

OverlapResult sum_of_slater(const CIVector& ci, std::size_t k) {
  if (k < 1) throw ValidationError("determinant budget must be at least 1");
  double s = 0.0;
  for (auto i : top_determinants(ci, k)) s += std::pow(ci.amplitudes(static_cast<Eigen::Index>(i)), 2);
  return {"SOS", k, std::min(1.0, std::sqrt(s) / ci.norm())};
}

std::vector<std::size_t> MpsState::bond_dims() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 1; j < sites.size(); ++j) out.push_back(static_cast<std::size_t>(sites[j][0].rows()));
  return out;
}

std::size_t MpsState::max_bond() const {
  std::size_t m = 1;
  for (auto b : bond_dims()) m = std::max(m, b);
  return m;
}

Eigen::VectorXd MpsState::to_vector() const {
  const std::size_t n = sites.size();
  if (n > kMaxSpinOrbitals) throw ValidationError("register too large for a full vector");
  // rows: prefix configurations of sites < j (bit j−1 most recent), cols: right bond.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Ones(1, 1);
  for (std::size_t j = 0; j < n; ++j) {
    const auto prefixes = acc.rows();
    Eigen::MatrixXd next(2 * prefixes, sites[j][0].cols());
    for (int s = 0; s < 2; ++s) next.middleRows(s * prefixes, prefixes) = acc * sites[j][static_cast<std::size_t>(s)];
    acc = std::move(next);
  }
  // Row index = Σ_j s_j 2^j by construction of the stacking above.
  return acc.col(0);
}

MpsState ci_to_mps(const CIVector& ci) {
  const std::size_t n = ci.sector.n_qubits;
  Eigen::VectorXd psi = ci.full_vector();
  psi /= psi.norm();
  MpsState mps;
  mps.sites.resize(n);
  // rest: (χ_left · 2) × 2^{remaining} with the current site as the fast index after χ.
  Eigen::MatrixXd rest = Eigen::Map<const Eigen::MatrixXd>(psi.data(), 1, psi.size());
  for (std::size_t j = 0; j < n; ++j) {
    const auto chi = rest.rows();
    const auto remaining = rest.cols() / 2;
    // Split off site j: row (a, s), column r, where the state index is s + 2·r.
    Eigen::MatrixXd m(2 * chi, remaining);
    for (Eigen::Index a = 0; a < chi; ++a)
      for (Eigen::Index r = 0; r < remaining; ++r) {
        m(a, r) = rest(a, 2 * r);
        m(chi + a, r) = rest(a, 2 * r + 1);
      }
    if (j + 1 == n) {
      mps.sites[j][0] = m.topRows(chi);
      mps.sites[j][1] = m.bottomRows(chi);
      break;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::Index keep = 0;
    const double cut = 1e-14 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    while (keep < sv.size() && sv(keep) > cut) ++keep;
    keep = std::max<Eigen::Index>(keep, 1);
    const Eigen::MatrixXd u = svd.matrixU().leftCols(keep);
    mps.sites[j][0] = u.topRows(chi);
    mps.sites[j][1] = u.bottomRows(chi);
    rest = sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
  }
  return mps;
}

MpsState truncate_mps(const MpsState& mps, std::size_t chi) {
  if (chi < 1) throw ValidationError("bond dimension must be at least 1");
  MpsState out = mps;
  const std::size_t n = out.sites.size();
  // Bring the state into left-canonical form first (QR sweep).
  for (std::size_t j = 0; j + 1 < n; ++j) {
    auto& a = out.sites[j];
    const auto rows = a[0].rows();
    Eigen::MatrixXd stacked(2 * rows, a[0].cols());
    stacked << a[0], a[1];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
    const auto k = std::min(stacked.rows(), stacked.cols());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(stacked.rows(), k);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    a[0] = q.topRows(rows);
    a[1] = q.bottomRows(rows);
    for (auto& b : out.sites[j + 1]) b = (r * b).eval();
  }
  // Right-to-left: at each bond the singular values are the Schmidt coefficients.
  for (std::size_t j = n - 1; j > 0; --j) {
    auto& a = out.sites[j];
    const auto rows = a[0].rows();
    const auto cols = a[0].cols();
    Eigen::MatrixXd m(rows, 2 * cols);
    m << a[0], a[1];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(chi), svd.singularValues().size());
    const Eigen::MatrixXd vt = svd.matrixV().leftCols(keep).transpose();
    a[0] = vt.leftCols(cols);
    a[1] = vt.rightCols(cols);
    const Eigen::MatrixXd us = svd.matrixU().leftCols(keep) * svd.singularValues().head(keep).asDiagonal();
    for (auto& b : out.sites[j - 1]) b = (b * us).eval();
  }
  const double nrm = std::sqrt(out.sites[0][0].squaredNorm() + out.sites[0][1].squaredNorm());
  if (nrm > 0.0)
    for (auto& b : out.sites[0]) b /= nrm;
  return out;
}

OverlapResult mps_overlap(const MpsState& mps, const CIVector& ci, std::size_t chi_label) {
  const Eigen::VectorXd v = mps.to_vector();
  const Eigen::VectorXd c = ci.full_vector();
  if (v.size() != c.size()) throw ValidationError("MPS and CI registers differ");
  const double denom = v.norm() * c.norm();
  const double eta = denom > 0.0 ? std::abs(v.dot(c)) / denom : 0.0;
  return {"MPS", chi_label == 0 ? mps.max_bond() : chi_label, std::min(1.0, eta)};
}

}  // namespace fq::guiding
