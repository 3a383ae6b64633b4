#include "fq/qre/integrals.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fq/error.hpp"

namespace fq::qre {

FermionIntegrals::FermionIntegrals(std::size_t n_spatial, std::size_t n_electrons, int ms2)
    : n_(n_spatial), n_electrons_(n_electrons), ms2_(ms2) {
  if (n_spatial < 1) throw ValidationError("integrals need at least one orbital");
  if (n_electrons > 2 * n_spatial) throw ValidationError("more electrons than spin orbitals");
  if (std::abs(ms2) > static_cast<int>(n_electrons) || (static_cast<int>(n_electrons) + ms2) % 2 != 0) {
    throw ValidationError("inconsistent spin projection");
  }
  const auto n = static_cast<Eigen::Index>(n_spatial);
  h_ = Eigen::MatrixXd::Zero(n, n);
  g_.assign(n_spatial * n_spatial * n_spatial * n_spatial, 0.0);
}

void FermionIntegrals::set_g(std::size_t p, std::size_t q, std::size_t r, std::size_t s, double value) {
  if (p >= n_ || q >= n_ || r >= n_ || s >= n_) throw ValidationError("orbital index out of range");
  for (auto [a, b] : {std::pair{p, q}, std::pair{q, p}}) {
    for (auto [c, d] : {std::pair{r, s}, std::pair{s, r}}) {
      g_[index(a, b, c, d)] = value;
      g_[index(c, d, a, b)] = value;
    }
  }
}

void FermionIntegrals::validate(double tol) const {
  if (n_ < 1) throw ValidationError("integrals need at least one orbital");
  if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > tol) throw ValidationError("one-electron integrals are not symmetric");
  for (std::size_t p = 0; p < n_; ++p)
    for (std::size_t q = 0; q < n_; ++q)
      for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t s = 0; s < n_; ++s) {
          const double v = g(p, q, r, s);
          if (std::abs(v - g(q, p, r, s)) > tol || std::abs(v - g(p, q, s, r)) > tol || std::abs(v - g(r, s, p, q)) > tol) {
            throw ValidationError(fmt::format("two-electron integrals break 8-fold symmetry at ({}{}|{}{})", p + 1, q + 1, r + 1, s + 1));
          }
        }
}

Eigen::MatrixXd FermionIntegrals::supermatrix() const {
  const auto m = static_cast<Eigen::Index>(n_ * n_);
  Eigen::MatrixXd v(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) v(a, b) = g_[static_cast<std::size_t>(a * m + b)];
  return v;
}

FermionIntegrals FermionIntegrals::rotated(const Eigen::MatrixXd& c) const {
  const auto n = static_cast<Eigen::Index>(n_);
  if (c.rows() != n || c.cols() != n) throw ValidationError("orbital rotation has the wrong shape");
  FermionIntegrals out(n_, n_electrons_, ms2_);
  out.e_core = e_core;
  out.h_ = c.transpose() * h_ * c;
  // Four quarter transforms on the flattened tensor.
  std::vector<double> a = g_;
  std::vector<double> b(a.size());
  const std::size_t N = n_;
  for (int pass = 0; pass < 4; ++pass) {
    // Transform the last index and rotate it to the front: T'[s', p, q, r] = Σ_s T[p, q, r, s] C[s, s'].
    for (std::size_t pqr = 0; pqr < N * N * N; ++pqr)
      for (std::size_t t = 0; t < N; ++t) {
        double acc = 0.0;
        for (std::size_t s = 0; s < N; ++s) acc += a[pqr * N + s] * c(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
        b[t * N * N * N + pqr] = acc;
      }
    std::swap(a, b);
  }
  out.g_ = std::move(a);
  return out;
}

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Reads KEY=value from the namelist header; returns -1 when absent.
long header_int(const std::string& header, const std::string& key, std::size_t line) {
  const auto h = lower(header);
  auto pos = h.find(lower(key));
  while (pos != std::string::npos) {
    const bool boundary = pos == 0 || !std::isalnum(static_cast<unsigned char>(h[pos - 1]));
    std::size_t k = pos + key.size();
    while (k < h.size() && std::isspace(static_cast<unsigned char>(h[k]))) ++k;
    if (boundary && k < h.size() && h[k] == '=') {
      ++k;
      while (k < h.size() && std::isspace(static_cast<unsigned char>(h[k]))) ++k;
      long value = 0;
      const char* first = h.data() + k;
      if (k < h.size() && h[k] == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, h.data() + h.size(), value);
      if (ec != std::errc()) throw ParseError("FCIDUMP header: bad value for " + key, line);
      return value;
    }
    pos = h.find(lower(key), pos + 1);
  }
  return -1;
}

}  // namespace

FermionIntegrals parse_fcidump_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string header;
  std::size_t line_no = 0;
  bool started = false;
  bool ended = false;
  std::size_t header_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto l = lower(line);
    if (!started) {
      if (l.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (l.find("&fci") == std::string::npos) throw ParseError("FCIDUMP: missing &FCI header", line_no);
      started = true;
      header_line = line_no;
    }
    header += line + "\n";
    if (l.find("&end") != std::string::npos || l.find('/') != std::string::npos) {
      ended = true;
      break;
    }
  }
  if (!started) throw ParseError("FCIDUMP: missing &FCI header", line_no);
  if (!ended) throw ParseError("FCIDUMP: header is not terminated", line_no);
  const long norb = header_int(header, "NORB", header_line);
  const long nelec = header_int(header, "NELEC", header_line);
  long ms2 = header_int(header, "MS2", header_line);
  if (norb < 1) throw ParseError("FCIDUMP header: NORB missing or not positive", header_line);
  if (nelec < 0) throw ParseError("FCIDUMP header: NELEC missing", header_line);
  if (ms2 == -1) ms2 = 0;

  FermionIntegrals out;
  try {
    out = FermionIntegrals(static_cast<std::size_t>(norb), static_cast<std::size_t>(nelec), static_cast<int>(ms2));
  } catch (const ValidationError& e) {
    throw ParseError(std::string("FCIDUMP header: ") + e.what(), header_line);
  }
  const auto n = static_cast<long>(norb);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string vs;
    fields >> vs;
    double value = 0.0;
    {
      std::string v = vs;
      for (auto& ch : v)
        if (ch == 'd' || ch == 'D') ch = 'e';
      char* endp = nullptr;
      value = std::strtod(v.c_str(), &endp);
      if (endp == v.c_str() || *endp != '\0') throw ParseError("FCIDUMP: non-numeric value '" + vs + "'", line_no);
    }
    long idx[4];
    for (auto& i : idx) {
      std::string t;
      if (!(fields >> t)) throw ParseError("FCIDUMP: expected four indices", line_no);
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
      if (ec != std::errc() || ptr != t.data() + t.size()) throw ParseError("FCIDUMP: non-numeric index '" + t + "'", line_no);
      if (i < 0 || i > n) throw ParseError(fmt::format("FCIDUMP: index {} out of range 0..{}", i, n), line_no);
    }
    const auto [p, q, r, s] = idx;
    if (p == 0 && q == 0 && r == 0 && s == 0) {
      out.e_core = value;
    } else if (r == 0 && s == 0) {
      if (p == 0 || q == 0) throw ParseError("FCIDUMP: one-electron entry needs two orbital indices", line_no);
      out.h(static_cast<std::size_t>(p - 1), static_cast<std::size_t>(q - 1)) = value;
      out.h(static_cast<std::size_t>(q - 1), static_cast<std::size_t>(p - 1)) = value;
    } else if (p == 0 || q == 0 || r == 0 || s == 0) {
      throw ParseError("FCIDUMP: orbital energies and partial index sets are not supported", line_no);
    } else {
      out.set_g(static_cast<std::size_t>(p - 1), static_cast<std::size_t>(q - 1), static_cast<std::size_t>(r - 1),
                static_cast<std::size_t>(s - 1), value);
    }
  }
  return out;
}

FermionIntegrals parse_fcidump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open FCIDUMP " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_fcidump_string(buf.str());
}

std::string format_fcidump(const FermionIntegrals& x) {
  const std::size_t n = x.n_spatial();
  std::string out = fmt::format(" &FCI NORB={},NELEC={},MS2={},\n  ORBSYM=", n, x.n_electrons(), x.ms2());
  for (std::size_t i = 0; i < n; ++i) out += "1,";
  out += "\n  ISYM=1,\n &END\n";
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q <= p; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s <= r; ++s) {
          if (p * (p + 1) / 2 + q < r * (r + 1) / 2 + s) continue;
          const double v = x.g(p, q, r, s);
          if (v != 0.0) out += fmt::format("{:.17g} {} {} {} {}\n", v, p + 1, q + 1, r + 1, s + 1);
        }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q <= p; ++q) {
      const double v = x.h(p, q);
      if (v != 0.0) out += fmt::format("{:.17g} {} {} 0 0\n", v, p + 1, q + 1);
    }
  out += fmt::format("{:.17g} 0 0 0 0\n", x.e_core);
  return out;
}

void write_fcidump(const FermionIntegrals& integrals, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write FCIDUMP " + path.string());
  out << format_fcidump(integrals);
}

}  // namespace fq::qre
