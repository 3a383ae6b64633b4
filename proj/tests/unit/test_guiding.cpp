#include <catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <filesystem>

#include <Eigen/Eigenvalues>

#include "fq/error.hpp"
#include "fq/guiding/curve.hpp"
#include "fq/guiding/overlap.hpp"
#include "fq/guiding/sector.hpp"
#include "fq/qre/generators.hpp"
#include "fq/qre/mapping.hpp"

using namespace fq::guiding;
using fq::qre::FermionIntegrals;
using fq::qre::PauliHamiltonian;
using Catch::Approx;

namespace {

const std::filesystem::path kH2 = std::filesystem::path(FQ_DATA_DIR) / "fcidump" / "h2_sto3g.fcidump";

FermionIntegrals chain(std::size_t n) {
  fq::qre::PppChainSpec s;
  s.n_sites = n;
  return fq::qre::ppp_chain(s);
}

// Full-register expectation values, computed from the dense vector.
double expect_count(const Eigen::VectorXd& v, std::uint64_t mask) {
  double s = 0.0;
  for (Eigen::Index b = 0; b < v.size(); ++b) s += v(b) * v(b) * std::popcount(static_cast<std::uint64_t>(b) & mask);
  return s / v.squaredNorm();
}

double full_energy(const PauliHamiltonian& h, const Eigen::VectorXd& v) {
  std::vector<fq::qre::cplx> in(static_cast<std::size_t>(v.size())), out(in.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) in[static_cast<std::size_t>(i)] = v(i);
  h.apply(in, out);
  double e = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) e += v(i) * out[static_cast<std::size_t>(i)].real();
  return e / v.squaredNorm();
}

CIVector truncated_sos(const CIVector& ci, std::size_t k) {
  CIVector t = ci;
  t.amplitudes.setZero();
  for (auto i : top_determinants(ci, k)) t.amplitudes(static_cast<Eigen::Index>(i)) = ci.amplitudes(static_cast<Eigen::Index>(i));
  t.amplitudes.normalize();
  return t;
}

}  // namespace

TEST_CASE("Sector basis", "[guiding]") {
  const auto s = Sector::from_electrons(3, 3, 1);
  CHECK(s.n_alpha == 2);
  CHECK(s.n_beta == 1);
  const auto b = s.basis();
  CHECK(b.size() == 9);
  CHECK(std::is_sorted(b.begin(), b.end()));
  for (auto d : b) CHECK(s.contains(d));
  CHECK_THROWS_AS(Sector::from_electrons(2, 5), fq::ValidationError);
  CHECK_THROWS_AS(Sector::from_electrons(2, 2, 1), fq::ValidationError);
}

TEST_CASE("Exact ground state", "[guiding]") {
  SECTION("diagonal Hamiltonian has a single-determinant ground state") {
    const auto h = PauliHamiltonian::parse("0.3 Z0\n-0.2 Z1\n0.5 Z2\n0.1 Z3\n0.05 Z0 Z2\n", 4);
    const auto g = exact_ground_state(h, Sector::from_electrons(2, 2));
    CHECK(g.state.amplitudes.cwiseAbs().maxCoeff() == Approx(1.0).margin(1e-12));
    const double eta = hartree_fock_overlap(g.state, hartree_fock_determinant(g.state.sector)).eta;
    CHECK((std::abs(eta) < 1e-12 || std::abs(eta - 1.0) < 1e-12));
  }
  SECTION("H2 matches dense full-register diagonalization") {
    const auto x = fq::qre::parse_fcidump(kH2);
    const auto g = exact_ground_state(x);
    const auto dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(fq::qre::jordan_wigner(x).dense()).eigenvalues();
    CHECK(std::abs(g.energy - dense(0)) < 1e-10);
    CHECK(g.residual < 1e-8);
    CHECK(g.state.norm() == Approx(1.0).margin(1e-12));
    CHECK_FALSE(g.degenerate);
  }
  SECTION("Lanczos path agrees with dense") {
    const auto x = chain(5);
    const auto dense = exact_ground_state(x);
    const auto lanczos = exact_ground_state(x, {.dense_limit = 0});
    CHECK(std::abs(dense.energy - lanczos.energy) < 1e-9);
    CHECK(lanczos.residual < 1e-8);
    CHECK(std::abs(std::abs(dense.state.amplitudes.dot(lanczos.state.amplitudes)) - 1.0) < 1e-8);
  }
  SECTION("degenerate ground space is flagged") {
    const auto g = exact_ground_state(FermionIntegrals(2, 2));
    CHECK(g.degenerate);
    CHECK(g.state.norm() == Approx(1.0).margin(1e-12));
  }
  SECTION("size limit") {
    CHECK_THROWS_AS(exact_ground_state(FermionIntegrals(9, 2)), fq::ValidationError);
  }
}

TEST_CASE("Hartree-Fock and sum-of-Slater overlaps", "[guiding]") {
  const auto g = exact_ground_state(fq::qre::parse_fcidump(kH2));
  const auto hf = hartree_fock_determinant(g.state.sector);
  CHECK(hf == 0b0011);
  CHECK(hartree_fock_overlap(g.state, hf).eta > 0.9);

  CIVector basis_state = g.state;
  basis_state.amplitudes.setZero();
  basis_state.amplitudes(basis_state.index_of(hf)) = 1.0;
  CHECK(hartree_fock_overlap(basis_state, hf).eta == 1.0);
  CIVector orth = basis_state;
  orth.amplitudes.setZero();
  orth.amplitudes(orth.index_of(0b1100)) = 1.0;
  CHECK(hartree_fock_overlap(orth, hf).eta == 0.0);
  CHECK_THROWS_AS(hartree_fock_overlap(g.state, 0b0101), fq::ValidationError);

  CHECK(sum_of_slater(g.state, 4).eta == Approx(1.0).margin(1e-12));
  CHECK(sum_of_slater(g.state, 100).eta == Approx(1.0).margin(1e-12));
  CHECK(sum_of_slater(g.state, 1).eta == Approx(g.state.amplitudes.cwiseAbs().maxCoeff()).epsilon(1e-14));
  CHECK_THROWS_AS(sum_of_slater(g.state, 0), fq::ValidationError);

  CIVector tie = g.state;
  tie.amplitudes.setConstant(0.5);
  CHECK(top_determinants(tie, 2) == std::vector<std::size_t>{0, 1});

  const auto big = exact_ground_state(chain(5));
  double prev = 0.0;
  for (std::size_t k = 1; k <= big.state.basis.size(); ++k) {
    const double eta = sum_of_slater(big.state, k).eta;
    CHECK(eta >= prev - 1e-15);
    prev = eta;
  }
  CHECK(prev == Approx(1.0).margin(1e-12));
  CHECK(sum_of_slater(big.state, 1).eta >= hartree_fock_overlap(big.state, hartree_fock_determinant(big.state.sector)).eta);
}

TEST_CASE("MPS construction and truncation", "[guiding][mps]") {
  SECTION("product state needs bond dimension one") {
    const auto g = exact_ground_state(PauliHamiltonian::parse("0.3 Z0\n-0.2 Z1\n0.5 Z2\n0.1 Z3\n", 4), Sector::from_electrons(2, 2));
    const auto mps = ci_to_mps(g.state);
    CHECK(mps.max_bond() == 1);
    CHECK(mps_overlap(truncate_mps(mps, 1), g.state).eta == Approx(1.0).margin(1e-12));
  }
  SECTION("entangled fixture") {
    const auto x = chain(5);
    const auto g = exact_ground_state(x);
    const auto h = fq::qre::jordan_wigner(x);
    const auto mps = ci_to_mps(g.state);
    const std::size_t n = mps.n_sites();
    CHECK(mps_overlap(mps, g.state).eta == Approx(1.0).margin(1e-12));
    const auto bonds = mps.bond_dims();
    for (std::size_t j = 1; j < n; ++j) CHECK(bonds[j - 1] <= (std::size_t{1} << std::min(j, n - j)));

    const double full = mps_overlap(truncate_mps(mps, std::size_t{1} << (n / 2)), g.state).eta;
    CHECK(std::abs(full - 1.0) < 1e-12);
    const double e2 = mps_overlap(truncate_mps(mps, 2), g.state).eta;
    const double e4 = mps_overlap(truncate_mps(mps, 4), g.state).eta;
    CHECK(e2 < e4);
    CHECK(e4 <= 1.0);
    double prev = 0.0;
    for (std::size_t chi = 1; chi <= 32; ++chi) {
      const auto t = truncate_mps(mps, chi);
      CHECK(t.max_bond() <= chi);
      const double eta = mps_overlap(t, g.state).eta;
      CHECK(eta >= prev - 1e-12);
      prev = eta;
      const Eigen::VectorXd v = t.to_vector();
      CHECK(v.norm() == Approx(1.0).margin(1e-12));
      CHECK(full_energy(h, v) >= g.energy - 1e-8);
      CHECK(expect_count(v, 0x5555555555555555ULL) == Approx(3.0).margin(1e-12));
      CHECK(expect_count(v, 0xAAAAAAAAAAAAAAAAULL) == Approx(2.0).margin(1e-12));
    }
    CHECK_THROWS_AS(truncate_mps(mps, 0), fq::ValidationError);
  }
  SECTION("sum-of-Slater states are variational") {
    const auto x = chain(4);
    const auto g = exact_ground_state(x);
    const auto h = fq::qre::jordan_wigner(x);
    for (std::size_t k : {1, 2, 4, 8, 16}) CHECK(full_energy(h, truncated_sos(g.state, k).full_vector()) >= g.energy - 1e-8);
  }
}

TEST_CASE("Overlap curve", "[guiding][curve]") {
  const std::vector<FamilyMember> single{{"h2", fq::qre::parse_fcidump(kH2)}};
  CurveRequest req;
  req.chi = {2};
  const auto rows = overlap_curve(single, req);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].overlap.method == "HF");
  CHECK(rows[1].overlap.method == "SOS");
  CHECK(rows[1].overlap.param == 8);
  CHECK(rows[2].overlap.method == "MPS");

  const auto family = family_from_json(nlohmann::json{{"generator", "ppp_chain"}, {"sizes", {2, 3, 4, 5, 6}}});
  CurveRequest full;
  full.sos_per_orbital = {1, 2, 4};
  full.chi = {1, 2, 4, 8, 16};
  const auto table = overlap_curve(family, full);
  CHECK(table.size() == 5 * 9);
  for (const auto& r : table) {
    CHECK(r.overlap.eta >= 0.0);
    CHECK(r.overlap.eta <= 1.0);
  }
  for (std::size_t n = 2; n <= 6; ++n) {
    std::map<std::string, std::vector<double>> by;
    for (const auto& r : table)
      if (r.n_orbitals == n) by[r.overlap.method].push_back(r.overlap.eta);
    for (const auto& [m, v] : by) CHECK(std::is_sorted(v.begin(), v.end()));
    CHECK(by["MPS"].back() >= by["HF"].front() - 1e-12);
  }
  const auto csv = format_curve_csv(rows);
  CHECK(csv.rfind("n_orbitals,method,param,eta\n", 0) == 0);
  CHECK_THROWS_AS(family_from_json(nlohmann::json{{"generator", "nope"}}), fq::ValidationError);
}
