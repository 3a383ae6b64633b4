#include <catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fq/error.hpp"
#include "fq/qre/cost.hpp"
#include "fq/qre/generators.hpp"
#include "fq/qre/integrals.hpp"
#include "fq/qre/mapping.hpp"
#include "fq/qre/pauli.hpp"
#include "fq/qre/trotter.hpp"

using namespace fq::qre;
using Catch::Approx;

namespace {

const std::filesystem::path kH2 = std::filesystem::path(FQ_DATA_DIR) / "fcidump" / "h2_sto3g.fcidump";
constexpr double kH2Fci = -1.137270174660903;

// Determinant-basis oracle: second-quantized operators applied to occupation
// bit strings with the ordering sign (−1)^{occupied modes below j}.
std::optional<std::pair<int, std::uint64_t>> annihilate(std::uint64_t b, std::size_t j) {
  if (!((b >> j) & 1U)) return std::nullopt;
  const int sign = (std::popcount(b & ((std::uint64_t{1} << j) - 1)) & 1) ? -1 : 1;
  return std::pair{sign, b & ~(std::uint64_t{1} << j)};
}
std::optional<std::pair<int, std::uint64_t>> create(std::uint64_t b, std::size_t j) {
  if ((b >> j) & 1U) return std::nullopt;
  const int sign = (std::popcount(b & ((std::uint64_t{1} << j) - 1)) & 1) ? -1 : 1;
  return std::pair{sign, b | (std::uint64_t{1} << j)};
}

struct SectorMatrix {
  std::vector<std::uint64_t> basis;
  Eigen::MatrixXd h;
};

SectorMatrix determinant_hamiltonian(const FermionIntegrals& x, std::size_t n_electrons) {
  const std::size_t n = x.n_spatial();
  const std::size_t modes = 2 * n;
  SectorMatrix out;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << modes); ++b)
    if (static_cast<std::size_t>(std::popcount(b)) == n_electrons) out.basis.push_back(b);
  std::map<std::uint64_t, Eigen::Index> where;
  for (std::size_t i = 0; i < out.basis.size(); ++i) where[out.basis[i]] = static_cast<Eigen::Index>(i);
  const auto dim = static_cast<Eigen::Index>(out.basis.size());
  out.h = Eigen::MatrixXd::Identity(dim, dim) * x.e_core;
  // ops applied right to left; each entry is (mode, create?)
  auto apply = [&](std::uint64_t b, std::initializer_list<std::pair<std::size_t, bool>> ops) -> std::optional<std::pair<int, std::uint64_t>> {
    int sign = 1;
    std::vector<std::pair<std::size_t, bool>> seq(ops);
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
      auto r = it->second ? create(b, it->first) : annihilate(b, it->first);
      if (!r) return std::nullopt;
      sign *= r->first;
      b = r->second;
    }
    return std::pair{sign, b};
  };
  for (std::size_t col = 0; col < out.basis.size(); ++col) {
    const auto b = out.basis[col];
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t s = 0; s < 2; ++s) {
          if (auto r = apply(b, {{2 * p + s, true}, {2 * q + s, false}})) {
            out.h(where.at(r->second), static_cast<Eigen::Index>(col)) += r->first * x.h(p, q);
          }
        }
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t t = 0; t < n; ++t) {
            const double v = x.g(p, q, r, t);
            if (v == 0.0) continue;
            for (std::size_t s1 = 0; s1 < 2; ++s1)
              for (std::size_t s2 = 0; s2 < 2; ++s2) {
                if (auto res = apply(b, {{2 * p + s1, true}, {2 * r + s2, true}, {2 * t + s2, false}, {2 * q + s1, false}})) {
                  out.h(where.at(res->second), static_cast<Eigen::Index>(col)) += 0.5 * res->first * v;
                }
              }
          }
  }
  return out;
}

Eigen::VectorXd sector_spectrum(const PauliHamiltonian& h, std::size_t n_electrons) {
  const Eigen::MatrixXcd full = h.dense();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index b = 0; b < full.rows(); ++b)
    if (static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(b))) == n_electrons) idx.push_back(b);
  const auto d = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXcd sub(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) sub(i, j) = full(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(sub, Eigen::EigenvaluesOnly).eigenvalues();
}

Eigen::VectorXd determinant_spectrum(const FermionIntegrals& x, std::size_t n_electrons) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(determinant_hamiltonian(x, n_electrons).h, Eigen::EigenvaluesOnly).eigenvalues();
}

// Independent |coefficient| sum over the text rendering, identity lines skipped.
double text_lambda(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  double s = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    double c = 0.0;
    std::string op;
    f >> c >> op;
    if (op != "I") s += std::abs(c);
  }
  return s;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

PppChainSpec chain(std::size_t n) {
  PppChainSpec s;
  s.n_sites = n;
  return s;
}

}  // namespace

TEST_CASE("FCIDUMP parsing", "[qre][fcidump]") {
  const auto one = parse_fcidump_string(" &FCI NORB=1,NELEC=1,MS2=1,\n &END\n -1.0 1 1 0 0\n 0.0 0 0 0 0\n");
  CHECK(one.n_spatial() == 1);
  CHECK(one.h(0, 0) == -1.0);

  FermionIntegrals x(3, 2);
  x.set_g(0, 1, 2, 0, 0.37);
  for (auto [p, q, r, s] : {std::array<std::size_t, 4>{0, 1, 2, 0}, {1, 0, 2, 0}, {0, 1, 0, 2}, {1, 0, 0, 2},
                            {2, 0, 0, 1}, {0, 2, 0, 1}, {2, 0, 1, 0}, {0, 2, 1, 0}}) {
    CHECK(x.g(p, q, r, s) == 0.37);
  }

  const auto h2 = parse_fcidump(kH2);
  CHECK(h2.n_spatial() == 2);
  CHECK(h2.n_electrons() == 2);
  CHECK(h2.g(1, 0, 1, 0) == 0.1812888082114958);
  const auto back = parse_fcidump_string(format_fcidump(h2));
  CHECK(back.e_core == h2.e_core);
  CHECK(back.one_body() == h2.one_body());
  CHECK(back.two_body() == h2.two_body());

  CHECK_THROWS_AS(parse_fcidump_string("NORB=2\n"), fq::ParseError);
  CHECK_THROWS_AS(parse_fcidump_string(" &FCI NELEC=2,\n &END\n"), fq::ParseError);
  try {
    parse_fcidump_string(" &FCI NORB=2,NELEC=2,\n &END\n 1.0 1 1 0 0\n 0.5 3 1 0 0\n");
    FAIL("expected a parse error");
  } catch (const fq::ParseError& e) {
    CHECK(e.line() == 4);
  }
  try {
    parse_fcidump_string(" &FCI NORB=2,NELEC=2,\n &END\n abc 1 1 0 0\n");
    FAIL("expected a parse error");
  } catch (const fq::ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("Pauli algebra matches 2x2 matrices", "[qre][pauli]") {
  const cplx I{0, 1};
  const std::map<char, Eigen::Matrix2cd> mats{
      {'I', Eigen::Matrix2cd::Identity()},
      {'X', (Eigen::Matrix2cd() << 0, 1, 1, 0).finished()},
      {'Y', (Eigen::Matrix2cd() << 0, -I, I, 0).finished()},
      {'Z', (Eigen::Matrix2cd() << 1, 0, 0, -1).finished()}};
  for (char a : std::string("IXYZ"))
    for (char b : std::string("IXYZ")) {
      const auto [k, c] = multiply(PauliString::single(a, 0), PauliString::single(b, 0));
      const Eigen::Matrix2cd expect = mats.at(a) * mats.at(b);
      const Eigen::Matrix2cd got = i_pow(k) * mats.at(c.op(0));
      CHECK((expect - got).norm() < 1e-15);
      CHECK(commutes(PauliString::single(a, 0), PauliString::single(b, 0)) == ((expect - mats.at(b) * mats.at(a)).norm() < 1e-15));
    }

  // Dense matrix of a single Y on qubit 1 of two qubits: kron(Y, I) with qubit 1 as the high bit.
  PauliHamiltonian y(2);
  y.add(PauliString::single('Y', 1), 1.0);
  Eigen::MatrixXcd kron = Eigen::MatrixXcd::Zero(4, 4);
  for (int hi = 0; hi < 2; ++hi)
    for (int hj = 0; hj < 2; ++hj)
      for (int l = 0; l < 2; ++l) kron(2 * hi + l, 2 * hj + l) = mats.at('Y')(hi, hj);
  CHECK((y.dense() - kron).norm() < 1e-15);
}

TEST_CASE("Pauli weight lambda", "[qre][pauli]") {
  auto h = PauliHamiltonian::parse("0.5 X0\n-0.25 Z0 Z1\n");
  CHECK(pauli_weight_lambda(h) == 0.75);
  CHECK(pauli_weight_lambda(PauliHamiltonian(3)) == 0.0);

  const auto a = PauliHamiltonian::parse("1.5 I\n0.3 X0 Y2\n-0.2 Z1\n0.1 Y0\n", 3);
  const auto reordered = PauliHamiltonian::parse("0.1 Y0\n-0.2 Z1\n1.5 I\n0.3 X0 Y2\n", 3);
  CHECK(pauli_weight_lambda(a) == Approx(pauli_weight_lambda(reordered)).epsilon(1e-15));
  CHECK(pauli_weight_lambda(a) == Approx(0.6).epsilon(1e-15));
  const auto b = PauliHamiltonian::parse("-0.7 X1 X2\n", 3);
  PauliHamiltonian u(3);
  for (const auto* src : {&a, &b})
    for (const auto& t : src->terms()) u.add(t.pauli, t.coeff);
  u.canonicalize();
  CHECK(pauli_weight_lambda(u) == Approx(pauli_weight_lambda(a) + pauli_weight_lambda(b)).epsilon(1e-15));

  const auto text = a.to_text();
  const auto round = PauliHamiltonian::parse(text);
  CHECK(round.n_qubits() == 3);
  CHECK(round.offset() == a.offset());
  REQUIRE(round.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(round.terms()[i].coeff == a.terms()[i].coeff);
    CHECK(round.terms()[i].pauli == a.terms()[i].pauli);
  }
  CHECK_THROWS_AS(PauliHamiltonian::parse("0.5 X0 X0\n"), fq::ParseError);
  CHECK_THROWS_AS(PauliHamiltonian::parse("0.5 Q0\n"), fq::ParseError);
  CHECK_THROWS_AS(PauliHamiltonian::parse("half X0\n"), fq::ParseError);
}

TEST_CASE("Jordan-Wigner mapping", "[qre][jw]") {
  SECTION("single orbital gives the number-operator spectrum") {
    FermionIntegrals x(1, 1, 1);
    x.h(0, 0) = 0.7;
    const auto h = jordan_wigner(x);
    CHECK(h.n_qubits() == 2);
    Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h.dense()).eigenvalues();
    CHECK(ev(0) == Approx(0.0).margin(1e-14));
    CHECK(ev(1) == Approx(0.7).margin(1e-14));
    CHECK(ev(2) == Approx(0.7).margin(1e-14));
    CHECK(ev(3) == Approx(1.4).margin(1e-14));
  }
  SECTION("zero integrals map to the identity") {
    const auto h = jordan_wigner(FermionIntegrals(3, 2));
    CHECK(h.size() == 0);
    CHECK(pauli_weight_lambda(h) == 0.0);
  }
  SECTION("H2 sector ground energy equals determinant FCI") {
    const auto x = parse_fcidump(kH2);
    const auto h = jordan_wigner(x);
    CHECK(h.n_qubits() == 4);
    const Eigen::MatrixXcd m = h.dense();
    CHECK((m - m.adjoint()).norm() < 1e-14);
    const auto jw = sector_spectrum(h, 2);
    const auto fci = determinant_spectrum(x, 2);
    CHECK(std::abs(jw(0) - fci(0)) < 1e-10);
    CHECK(std::abs(fci(0) - kH2Fci) < 1e-9);
    CHECK(pauli_weight_lambda(h) == Approx(text_lambda(h.to_text())).epsilon(1e-14));
  }
  SECTION("random integrals: every sector spectrum matches") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto x = random_integrals(3, 3, seed);
      const auto h = jordan_wigner(x);
      for (std::size_t ne : {1, 2, 3, 4}) {
        const auto a = sector_spectrum(h, ne);
        const auto b = determinant_spectrum(x, ne);
        REQUIRE(a.size() == b.size());
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("Symmetry shift", "[qre][shift]") {
  SECTION("number operator cancels exactly") {
    const auto n = PauliHamiltonian::from_sum(number_operator(4), 4);
    const auto s = symmetry_shift(n, 2);
    CHECK(s.lambda_before == Approx(2.0));
    CHECK(s.lambda_after == 0.0);
    CHECK(s.hamiltonian.offset() == Approx(2.0).margin(1e-14));
  }
  SECTION("null shift leaves H unchanged") {
    const auto h = jordan_wigner(parse_fcidump(kH2));
    const auto s = symmetry_shift(h, 2, {.use_number = false, .use_number_squared = false});
    CHECK(s.lambda_after == s.lambda_before);
    CHECK(s.hamiltonian.to_text() == h.to_text());
  }
  SECTION("H2 weight drops and the sector spectrum survives") {
    const auto h = jordan_wigner(parse_fcidump(kH2));
    const auto s = symmetry_shift(h, 2);
    CHECK(s.lambda_after < s.lambda_before);
    CHECK((sector_spectrum(h, 2) - sector_spectrum(s.hamiltonian, 2)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SECTION("each operator alone never raises lambda") {
    const auto h = jordan_wigner(random_integrals(3, 2, 99, 0.5));
    for (ShiftOptions o : {ShiftOptions{true, false}, ShiftOptions{false, true}}) {
      const auto s = symmetry_shift(h, 2, o);
      CHECK(s.lambda_after <= s.lambda_before);
      CHECK((sector_spectrum(h, 2) - sector_spectrum(s.hamiltonian, 2)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SECTION("non-conserving operator is rejected") {
    PauliHamiltonian h(2);
    h.add(PauliString::single('X', 0), 1.0);
    CHECK_THROWS_AS(symmetry_shift(h, 1), fq::DomainError);
  }
}

TEST_CASE("Exact Trotter error", "[qre][trotter]") {
  const auto commuting = PauliHamiltonian::parse("0.4 Z0\n-0.3 Z0 Z1\n0.2 Z1 Z2\n", 3);
  CHECK(trotter_error_exact(commuting, 0.1) < 1e-12);
  const auto single = PauliHamiltonian::parse("0.9 X0 Y1\n", 2);
  CHECK(trotter_error_exact(single, 0.1) < 1e-12);

  const auto h2 = jordan_wigner(parse_fcidump(kH2));
  const double e1 = trotter_error_exact(h2, 0.1);
  const double e2 = trotter_error_exact(h2, 0.05);
  CHECK(e1 / e2 == Approx(4.0).epsilon(0.1));

  for (const auto& h : {h2, jordan_wigner(ppp_chain(chain(3))), jordan_wigner(ppp_chain(chain(4)))}) {
    std::vector<double> d{0.2, 0.1, 0.05, 0.025};
    std::vector<double> e;
    for (double delta : d) e.push_back(trotter_error_exact(h, delta));
    CHECK(loglog_slope(d, e) == Approx(2.0).margin(0.1));
  }
  CHECK_THROWS_AS(trotter_error_exact(PauliHamiltonian::parse("1 X10\n"), 0.1), fq::ValidationError);
}

TEST_CASE("Trotter power-law fit", "[qre][trotter]") {
  const double c = 1.08e-4, a = 1.25;
  auto gen = [&](double lambda) { return std::pow(c * std::pow(lambda, a), 2); };
  std::vector<std::pair<double, double>> pts;
  for (double lambda : {2.0, 5.0, 11.0, 40.0, 120.0}) pts.emplace_back(lambda, gen(lambda));
  const auto m = fit_trotter_constant(pts);
  CHECK(m.c == Approx(c).epsilon(1e-10));
  CHECK(m.alpha == Approx(a).epsilon(1e-10));
  CHECK(m.constant(7.0) == Approx(gen(7.0)).epsilon(1e-9));

  const std::vector<std::pair<double, double>> two{{3.0, 2e-6}, {9.0, 5e-5}};
  const auto m2 = fit_trotter_constant(two);
  CHECK(m2.residual < 1e-12);
  CHECK(m2.constant(3.0) == Approx(2e-6).epsilon(1e-10));

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> noise(0.9, 1.1);
  std::vector<std::pair<double, double>> noisy;
  for (int i = 0; i < 40; ++i) {
    const double lambda = std::pow(10.0, 0.5 + 2.5 * i / 39.0);
    noisy.emplace_back(lambda, gen(lambda) * noise(rng));
  }
  CHECK(fit_trotter_constant(noisy).alpha == Approx(1.25).margin(0.05));
  const std::vector<std::pair<double, double>> bad{{1.0, 1.0}, {2.0, -1.0}};
  CHECK_THROWS_AS(fit_trotter_constant(bad), fq::ValidationError);
}

TEST_CASE("Overlap angle", "[qre][xi]") {
  CHECK(xi_from_overlap(1.0) == 0.0);
  CHECK(xi_from_overlap(0.5) == std::numbers::pi / 2);
  CHECK(xi_from_overlap(2.0 / 3.0) == Approx(std::numbers::pi / 6).epsilon(1e-14));
  CHECK_THROWS_AS(xi_from_overlap(0.4), fq::DomainError);
  CHECK_THROWS_AS(xi_from_overlap(0.0), fq::ValidationError);
  CHECK_THROWS_AS(xi_from_overlap(1.2), fq::ValidationError);
}

TEST_CASE("qDRIFT cost model", "[qre][cost]") {
  const CostConstants k;
  const auto r = qdrift_cost(10.0, 8, 1e-3, 1.0, k);
  // Direct evaluation of the documented model.
  const double xi = 1e-2;
  const double t = xi / (0.5e-3);
  const double nch = std::ceil(2 * 100.0 * t * t / 0.5e-3);
  const double group = (6 - 2) + 3 * 40.0;
  CHECK(r.max_gates_per_circuit == std::ceil(nch / 6) * group);
  CHECK(r.circuits_count == std::ceil(std::pow(std::numbers::pi / 2 / xi, 2)));
  CHECK(r.total_gates == r.max_gates_per_circuit * r.circuits_count);
  CHECK(r.ancilla_qubits == 6);
  CHECK(r.system_qubits == 8);

  const auto doubled = qdrift_cost(20.0, 8, 1e-3, 0.8, k);
  const auto base = qdrift_cost(10.0, 8, 1e-3, 0.8, k);
  CHECK(doubled.assumptions["channel_invocations"].get<double>() ==
        Approx(4.0 * base.assumptions["channel_invocations"].get<double>()).epsilon(1e-6));

  const auto edge = qdrift_cost(10.0, 8, 1e-3, 0.5, k);
  CHECK(edge.circuits_count == 1.0);
  CHECK(edge.assumptions["t_max"].get<double>() == Approx(std::numbers::pi / 2 / 0.5e-3));

  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0}) {
    const auto c = qdrift_cost(10.0, 8, 1e-3, eta, k);
    CHECK(c.max_gates_per_circuit <= prev);
    prev = c.max_gates_per_circuit;
  }
  CHECK(qdrift_cost(12.0, 8, 1e-3, 0.8, k).total_gates >= base.total_gates);
  CHECK(qdrift_cost(10.0, 8, 5e-4, 0.8, k).total_gates >= base.total_gates);

  CostConstants off = k;
  off.hwp_group = 1;
  CHECK(qdrift_cost(10.0, 8, 1e-3, 0.8, off).ancilla_qubits == 0);
  CHECK_THROWS_AS(qdrift_cost(10.0, 8, 1e-3, 0.3, k), fq::DomainError);
}

TEST_CASE("Partially randomized Trotter cost", "[qre][cost]") {
  const auto h = jordan_wigner(ppp_chain(chain(4)));
  const TrotterErrorModel model{1.08e-4, 1.25, 0.0};
  const CostConstants k;
  const double eps = presets::kAccuracyPerCircuit;

  const auto all = randomized_trotter_cost(h, model, eps, 0.9, k, {.n_deterministic = h.size()});
  CHECK(all.assumptions["randomized_gates"].get<double>() == 0.0);
  const double steps = all.assumptions["trotter_steps"].get<double>();
  const double per_step = 2.0 * std::ceil(h.size() / 6.0) * hwp_group_cost(6, k);
  CHECK(all.max_gates_per_circuit == Approx(steps * per_step).epsilon(1e-12));

  const auto none = randomized_trotter_cost(h, model, eps, 0.9, k, {.n_deterministic = 0});
  const auto q = qdrift_cost(pauli_weight_lambda(h), h.n_qubits(), eps, 0.9, k);
  CHECK(none.max_gates_per_circuit == q.max_gates_per_circuit);

  const auto best = randomized_trotter_cost(h, model, eps, 0.9, k);
  CHECK(best.total_gates <= all.total_gates);
  CHECK(best.total_gates <= none.total_gates);
  for (std::size_t kd = 0; kd <= h.size(); ++kd) {
    CHECK(best.total_gates <= randomized_trotter_cost(h, model, eps, 0.9, k, {.n_deterministic = kd}).total_gates);
  }

  CostConstants w1 = k;
  w1.hwp_group = 1;
  const double groups6 = std::ceil(h.size() / 6.0);
  const double groups1 = static_cast<double>(h.size());
  CHECK(groups6 / groups1 == Approx(1.0 / 6.0).margin(0.05));
  const auto r1 = randomized_trotter_cost(h, model, eps, 0.9, w1, {.n_deterministic = h.size()});
  CHECK(r1.ancilla_qubits == 0);
  CHECK(r1.system_qubits == 8);

  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {0.55, 0.7, 0.85, 1.0}) {
    const auto c = randomized_trotter_cost(h, model, eps, eta, k);
    CHECK(c.max_gates_per_circuit <= prev);
    prev = c.max_gates_per_circuit;
  }
  CHECK_THROWS_AS(randomized_trotter_cost(PauliHamiltonian(2), model, eps, 0.9, k), fq::ValidationError);
}

TEST_CASE("Double factorization", "[qre][df]") {
  FermionIntegrals single(3, 2);
  single.set_g(0, 0, 0, 0, 0.8);
  const auto d1 = double_factorize(single, 1e-12);
  REQUIRE(d1.leaves.size() == 1);
  CHECK(d1.leaves[0].rank == 1);
  CHECK(d1.reconstruction_error < 1e-14);

  const auto x = random_integrals(3, 2, 5);
  CHECK(double_factorize(x, 0.0).reconstruction_error < 1e-10);
  double prev_bound = std::numeric_limits<double>::infinity();
  for (double tau : {1.0, 0.3, 0.1, 0.01, 0.0}) {
    const auto d = double_factorize(x, tau);
    CHECK(d.error_bound <= prev_bound);
    CHECK(d.reconstruction_error <= d.error_bound + 1e-12);
    prev_bound = d.error_bound;
  }

  const auto h2 = parse_fcidump(kH2);
  Eigen::MatrixXd v(4, 4);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) v(a, b) = h2.g(a / 2, a % 2, b / 2, b % 2);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(v).eigenvalues();
  CHECK(double_factorize(h2, 1e-6).leaves.size() == static_cast<std::size_t>((ev.array().abs() > 1e-6).count()));

  FermionIntegrals broken(2, 2);
  broken.g_raw(0, 1, 0, 0) = 0.3;
  CHECK_THROWS_AS(double_factorize(broken, 0.0), fq::ValidationError);
}

TEST_CASE("Qubitization cost model", "[qre][cost]") {
  const CostConstants k;
  FermionIntegrals single(5, 2);
  single.set_g(1, 1, 1, 1, 0.5);
  const auto d1 = double_factorize(single, 1e-12);
  const auto r1 = qubitization_cost(d1, 1e-3, k);
  CHECK(r1.assumptions["toffoli_per_query"].get<double>() == 16.0 * 5 + 4.0);

  const auto df = double_factorize(ppp_chain(chain(4)), 1e-8);
  const auto r = qubitization_cost(df, 1e-3, k);
  const auto half = qubitization_cost(df, 0.5e-3, k);
  const double q = r.assumptions["queries"].get<double>();
  CHECK(std::abs(half.assumptions["queries"].get<double>() - 2 * q) <= 1.0);
  // Direct evaluation of the documented model.
  double lam2 = 0.0;
  std::size_t rank = 0;
  for (const auto& l : df.leaves) {
    lam2 += std::abs(l.eigenvalue) * std::pow(l.mu.cwiseAbs().sum(), 2);
    rank += l.rank;
  }
  const double lambda_df = df.lambda_one_body + 0.25 * lam2;
  CHECK(q == std::ceil(std::numbers::pi * lambda_df / 2e-3));
  CHECK(r.max_gates_per_circuit == Approx(q * (16.0 * 4 + 4.0 * static_cast<double>(rank))).epsilon(1e-14));
  CHECK(r.system_qubits == 8);
  CHECK(r.total_qubits() >= r.system_qubits);
  CHECK(r.total_gates >= r.max_gates_per_circuit);
  CHECK(system_qubits(30) == 60);
  CHECK_THROWS_AS(qubitization_cost(DoubleFactorization{}, 1e-3, k), fq::ValidationError);
}

TEST_CASE("Runtime estimate", "[qre][cost]") {
  CostReport r;
  r.total_gates = 1.2e10;
  r.max_gates_per_circuit = 1e9;
  r.circuits_count = 12;
  HardwareProfile p;
  p.gate_time = 1e-7;
  p.parallel_factor = 1;
  const auto e = runtime_estimate(r, p);
  CHECK(e.wall_seconds == Approx(1200.0).epsilon(1e-12));
  CHECK(e.required_gate_error == Approx(1e-10).epsilon(1e-12));
  p.parallel_factor = 12;
  CHECK(runtime_estimate(r, p).wall_seconds == Approx(100.0).epsilon(1e-12));
  p.parallel_factor = 100;
  CHECK(runtime_estimate(r, p).wall_seconds == Approx(100.0).epsilon(1e-12));
  p.gate_time = 0.0;
  CHECK_THROWS_AS(runtime_estimate(r, p), fq::ValidationError);
}
