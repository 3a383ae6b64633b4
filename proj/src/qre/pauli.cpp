#include "fq/qre/pauli.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fq/error.hpp"

namespace fq::qre {

PauliString PauliString::single(char op, std::size_t qubit) {
  if (qubit >= 64) throw ValidationError("qubit index beyond 63");
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  switch (op) {
    case 'I': return {};
    case 'X': return {bit, 0};
    case 'Y': return {bit, bit};
    case 'Z': return {0, bit};
    default: throw ValidationError(std::string("unknown Pauli operator '") + op + "'");
  }
}

std::size_t PauliString::weight() const { return static_cast<std::size_t>(std::popcount(x | z)); }

char PauliString::op(std::size_t qubit) const {
  const bool bx = (x >> qubit) & 1U;
  const bool bz = (z >> qubit) & 1U;
  return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
}

std::string PauliString::to_string() const {
  if (is_identity()) return "I";
  std::string out;
  for (std::size_t q = 0; q < 64; ++q) {
    const char c = op(q);
    if (c == 'I') continue;
    if (!out.empty()) out += ' ';
    out += fmt::format("{}{}", c, q);
  }
  return out;
}

cplx i_pow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

std::pair<int, PauliString> multiply(PauliString a, PauliString b) {
  const PauliString c{a.x ^ b.x, a.z ^ b.z};
  // i^{a}X^{xa}Z^{za} · i^{b}X^{xb}Z^{zb} = i^{a+b}(−1)^{za·xb} X^{xc}Z^{zc} and X^{xc}Z^{zc} = i^{−c}·P_c.
  const int k = std::popcount(a.x & a.z) + std::popcount(b.x & b.z) - std::popcount(c.x & c.z) +
                2 * std::popcount(a.z & b.x);
  return {((k % 4) + 4) % 4, c};
}

bool commutes(PauliString a, PauliString b) {
  return ((std::popcount(a.x & b.z) + std::popcount(a.z & b.x)) & 1) == 0;
}

// ---------------------------------------------------------------------------

void PauliSum::add(PauliString p, cplx c) {
  if (c == cplx{}) return;
  terms_[p] += c;
}

PauliSum PauliSum::operator*(const PauliSum& other) const {
  PauliSum out;
  for (const auto& [pa, ca] : terms_)
    for (const auto& [pb, cb] : other.terms_) {
      const auto [k, pc] = multiply(pa, pb);
      out.terms_[pc] += i_pow(k) * ca * cb;
    }
  return out;
}

PauliSum PauliSum::operator+(const PauliSum& other) const {
  PauliSum out = *this;
  for (const auto& [p, c] : other.terms_) out.terms_[p] += c;
  return out;
}

PauliSum PauliSum::operator*(cplx s) const {
  PauliSum out = *this;
  for (auto& [p, c] : out.terms_) c *= s;
  return out;
}

PauliSum PauliSum::commutator(const PauliSum& other) const {
  PauliSum out;
  for (const auto& [pa, ca] : terms_)
    for (const auto& [pb, cb] : other.terms_) {
      if (commutes(pa, pb)) continue;
      const auto [k, pc] = multiply(pa, pb);
      out.terms_[pc] += 2.0 * i_pow(k) * ca * cb;
    }
  return out;
}

void PauliSum::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

double PauliSum::max_abs() const {
  double m = 0.0;
  for (const auto& [p, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

// ---------------------------------------------------------------------------

PauliHamiltonian::PauliHamiltonian(std::size_t n_qubits, double offset) : n_qubits_(n_qubits), offset_(offset) {
  if (n_qubits > 64) throw ValidationError("at most 64 qubits are supported");
}

PauliHamiltonian PauliHamiltonian::from_sum(const PauliSum& sum, std::size_t n_qubits, double tol) {
  PauliHamiltonian h(n_qubits);
  for (const auto& [p, c] : sum.terms()) {
    if (std::abs(c.imag()) > tol) throw DomainError("operator is not Hermitian: imaginary coefficient on " + p.to_string());
    h.add(p, c.real());
  }
  h.canonicalize();
  return h;
}

void PauliHamiltonian::add(PauliString p, double c) {
  if (n_qubits_ < 64 && ((p.x | p.z) >> n_qubits_) != 0) {
    throw ValidationError("Pauli string " + p.to_string() + " acts outside the register");
  }
  if (p.is_identity()) {
    offset_ += c;
    return;
  }
  terms_.push_back({c, p});
}

void PauliHamiltonian::canonicalize(double tol) {
  std::map<PauliString, double> merged;
  for (const auto& t : terms_) merged[t.pauli] += t.coeff;
  terms_.clear();
  for (const auto& [p, c] : merged)
    if (std::abs(c) > tol && c != 0.0) terms_.push_back({c, p});
}

PauliSum PauliHamiltonian::to_sum() const {
  PauliSum s;
  s.add({}, offset_);
  for (const auto& t : terms_) s.add(t.pauli, t.coeff);
  return s;
}

Eigen::MatrixXcd PauliHamiltonian::dense() const {
  if (n_qubits_ > 12) throw ValidationError("dense matrices are limited to 12 qubits");
  const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << n_qubits_);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim) * offset_;
  for (const auto& t : terms_)
    for (Eigen::Index b = 0; b < dim; ++b) {
      const auto ub = static_cast<std::uint64_t>(b);
      m(static_cast<Eigen::Index>(ub ^ t.pauli.x), b) += t.coeff * pauli_phase(t.pauli, ub);
    }
  return m;
}

void PauliHamiltonian::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const std::uint64_t dim = std::uint64_t{1} << n_qubits_;
  if (in.size() != dim || out.size() != dim) throw ValidationError("state size does not match the register");
  for (std::uint64_t b = 0; b < dim; ++b) out[b] = offset_ * in[b];
  for (const auto& t : terms_)
    for (std::uint64_t b = 0; b < dim; ++b) out[b ^ t.pauli.x] += t.coeff * pauli_phase(t.pauli, b) * in[b];
}

std::string PauliHamiltonian::to_text() const {
  std::string out = fmt::format("# n_qubits {}\n{:.17g} I\n", n_qubits_, offset_);
  for (const auto& t : terms_) out += fmt::format("{:.17g} {}\n", t.coeff, t.pauli.to_string());
  return out;
}

PauliHamiltonian PauliHamiltonian::parse(const std::string& text, std::size_t n_qubits) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<PauliTerm> terms;
  double offset = 0.0;
  std::size_t needed = 0;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::istringstream comment(line.substr(hash + 1));
      std::string key;
      std::size_t value = 0;
      if (comment >> key && key == "n_qubits" && comment >> value && n_qubits == 0) declared = value;
      line.resize(hash);
    }
    std::istringstream fields(line);
    std::string tok;
    if (!(fields >> tok)) continue;
    char* endp = nullptr;
    const double c = std::strtod(tok.c_str(), &endp);
    if (endp == tok.c_str() || *endp != '\0') throw ParseError("Pauli term: non-numeric coefficient '" + tok + "'", line_no);
    PauliString p;
    bool any = false;
    while (fields >> tok) {
      any = true;
      if (tok == "I") continue;
      if (tok.size() < 2) throw ParseError("Pauli term: malformed factor '" + tok + "'", line_no);
      std::size_t q = 0;
      try {
        std::size_t used = 0;
        q = std::stoul(tok.substr(1), &used);
        if (used != tok.size() - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("Pauli term: bad qubit index in '" + tok + "'", line_no);
      }
      if (q >= 64) throw ParseError("Pauli term: qubit index beyond 63", line_no);
      PauliString f;
      try {
        f = PauliString::single(tok[0], q);
      } catch (const ValidationError& e) {
        throw ParseError(e.what(), line_no);
      }
      if ((p.x | p.z) & (f.x | f.z)) throw ParseError("Pauli term: qubit " + std::to_string(q) + " repeated", line_no);
      p.x |= f.x;
      p.z |= f.z;
      needed = std::max(needed, q + 1);
    }
    if (!any) throw ParseError("Pauli term: missing operator list", line_no);
    if (p.is_identity()) {
      offset += c;
    } else {
      terms.push_back({c, p});
    }
  }
  if (n_qubits == 0) n_qubits = std::max(declared, needed);
  if (needed > n_qubits) throw ValidationError("Pauli terms exceed the declared register");
  PauliHamiltonian h(n_qubits, offset);
  for (const auto& t : terms) h.add(t.pauli, t.coeff);
  h.canonicalize();
  return h;
}

double pauli_weight_lambda(const PauliHamiltonian& h) {
  double s = 0.0;
  for (const auto& t : h.terms()) s += std::abs(t.coeff);
  return s;
}

PauliHamiltonian read_pauli_hamiltonian(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open Pauli Hamiltonian " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return PauliHamiltonian::parse(buf.str());
}

void write_pauli_hamiltonian(const PauliHamiltonian& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write Pauli Hamiltonian " + path.string());
  out << h.to_text();
}

}  // namespace fq::qre
