#include "fq/qre/mapping.hpp"

#include <algorithm>
#include <cmath>

#include "fq/error.hpp"

namespace fq::qre {

PauliSum ladder(std::size_t j, bool create) {
  PauliString parity;
  for (std::size_t k = 0; k < j; ++k) parity.z |= std::uint64_t{1} << k;
  PauliString x = parity;
  PauliString y = parity;
  x.x |= std::uint64_t{1} << j;
  y.x |= std::uint64_t{1} << j;
  y.z |= std::uint64_t{1} << j;
  // a† = (X − iY)/2 and a = (X + iY)/2 on qubit j, Z string below.
  PauliSum out;
  out.add(x, 0.5);
  out.add(y, create ? cplx{0.0, -0.5} : cplx{0.0, 0.5});
  return out;
}

PauliSum number_operator(std::size_t n_qubits) {
  PauliSum n;
  n.add({}, 0.5 * static_cast<double>(n_qubits));
  for (std::size_t j = 0; j < n_qubits; ++j) n.add(PauliString::single('Z', j), -0.5);
  return n;
}

PauliHamiltonian jordan_wigner(const FermionIntegrals& x, double prune) {
  x.validate();
  const std::size_t n = x.n_spatial();
  const std::size_t nq = 2 * n;
  if (nq > 64) throw ValidationError("Jordan-Wigner register limited to 64 qubits");

  std::vector<PauliSum> cr(nq), an(nq);
  for (std::size_t j = 0; j < nq; ++j) {
    cr[j] = ladder(j, true);
    an[j] = ladder(j, false);
  }
  // E_ij = a†_i a_j
  std::vector<PauliSum> e(nq * nq);
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t j = 0; j < nq; ++j) e[i * nq + j] = cr[i] * an[j];

  std::map<PauliString, cplx> acc;
  acc[PauliString{}] += x.e_core;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const double hpq = x.h(p, q);
      if (hpq == 0.0) continue;
      for (int s = 0; s < 2; ++s)
        for (const auto& [pa, ca] : e[spin_orbital(p, s) * nq + spin_orbital(q, s)].terms()) acc[pa] += hpq * ca;
    }
  // ½ Σ (pq|rs) a†_i a†_k a_l a_j with i=(pσ), j=(qσ), k=(rτ), l=(sτ);
  // a†_i a†_k a_l a_j = E_ij E_kl − δ_jk E_il.
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s) {
          const double v = x.g(p, q, r, s);
          if (v == 0.0) continue;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const auto i = spin_orbital(p, a), j = spin_orbital(q, a), k = spin_orbital(r, b), l = spin_orbital(s, b);
              if (i == k || j == l) continue;  // a†a† and aa vanish on the same mode
              for (const auto& [pa, ca] : e[i * nq + j].terms())
                for (const auto& [pb, cb] : e[k * nq + l].terms()) {
                  const auto [ph, pc] = multiply(pa, pb);
                  acc[pc] += 0.5 * v * i_pow(ph) * ca * cb;
                }
              if (j == k) {
                for (const auto& [pa, ca] : e[i * nq + l].terms()) acc[pa] -= 0.5 * v * ca;
              }
            }
        }
  PauliSum total;
  for (const auto& [p, c] : acc) total.add(p, c);
  total.prune(prune);
  return PauliHamiltonian::from_sum(total, nq);
}

namespace {

// argmin_c Σ w_k |c − t_k| (midpoint between the two central points on a tie).
double weighted_median(std::vector<std::pair<double, double>> pts) {
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (const auto& [t, w] : pts) total += w;
  double run = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    run += pts[k].second;
    if (run > 0.5 * total) return pts[k].first;
    if (run == 0.5 * total) return k + 1 < pts.size() ? 0.5 * (pts[k].first + pts[k + 1].first) : pts[k].first;
  }
  return pts.back().first;
}

}  // namespace

SymmetryShift symmetry_shift(const PauliHamiltonian& h, std::size_t n_electrons, const ShiftOptions& options) {
  const std::size_t nq = h.n_qubits();
  if (n_electrons > nq) throw ValidationError("particle number exceeds the register");
  const PauliSum number = number_operator(nq);
  auto comm = h.to_sum().commutator(number);
  comm.prune(1e-10);
  if (!comm.terms().empty()) throw DomainError("Hamiltonian does not conserve particle number");

  // Only Z_j and Z_iZ_j strings are touched. With n_j = (1 − Z_j)/2:
  //   N̂  ⊃ −½ Z_j,   N̂² ⊃ −(n_q/2) Z_j + ½ Z_iZ_j.
  // Z_j coefficients move by w = ½c₁ + (n_q/2)c₂ and Z_iZ_j by −v, v = ½c₂.
  std::map<PauliString, double> coeff;
  for (const auto& t : h.terms()) coeff[t.pauli] = t.coeff;
  auto lookup = [&](PauliString p) {
    auto it = coeff.find(p);
    return it == coeff.end() ? 0.0 : it->second;
  };
  std::vector<double> hz, hzz;
  for (std::size_t i = 0; i < nq; ++i) {
    hz.push_back(lookup(PauliString::single('Z', i)));
    for (std::size_t j = i + 1; j < nq; ++j) {
      hzz.push_back(lookup(PauliString{0, (std::uint64_t{1} << i) | (std::uint64_t{1} << j)}));
    }
  }
  const double half_nq = 0.5 * static_cast<double>(nq);
  double c1 = 0.0, c2 = 0.0;
  if (options.use_number && options.use_number_squared) {
    std::vector<std::pair<double, double>> pz, pzz;
    for (double v : hz) pz.emplace_back(-v, 1.0);
    for (double v : hzz) pzz.emplace_back(v, 1.0);
    const double w = weighted_median(pz);
    const double v = weighted_median(pzz);
    c2 = 2.0 * v;
    c1 = 2.0 * (w - half_nq * c2);
  } else if (options.use_number) {
    std::vector<std::pair<double, double>> pz;
    for (double v : hz) pz.emplace_back(-v, 1.0);
    c1 = 2.0 * weighted_median(pz);
  } else if (options.use_number_squared) {
    // Σ|h_j + (n_q/2)c₂| + Σ|h_ij − ½c₂| as a weighted median in c₂.
    std::vector<std::pair<double, double>> pts;
    for (double v : hz) pts.emplace_back(-v / half_nq, half_nq);
    for (double v : hzz) pts.emplace_back(2.0 * v, 0.5);
    c2 = weighted_median(pts);
  }

  const double ne = static_cast<double>(n_electrons);
  PauliSum shift;
  if (c1 != 0.0) {
    shift = shift + number * c1;
    shift.add({}, -c1 * ne);
  }
  if (c2 != 0.0) {
    shift = shift + (number * number) * c2;
    shift.add({}, -c2 * ne * ne);
  }
  PauliSum shifted = h.to_sum() + shift * -1.0;
  shifted.prune(1e-14);

  SymmetryShift out;
  out.lambda_before = pauli_weight_lambda(h);
  out.hamiltonian = PauliHamiltonian::from_sum(shifted, nq);
  out.lambda_after = pauli_weight_lambda(out.hamiltonian);
  out.c_number = c1;
  out.c_number_squared = c2;
  if (out.lambda_after > out.lambda_before) {
    // Rounding only; the unshifted operator is always feasible.
    out.hamiltonian = h;
    out.lambda_after = out.lambda_before;
    out.c_number = out.c_number_squared = 0.0;
  }
  return out;
}

}  // namespace fq::qre
