#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fq/error.hpp"

namespace fq::surrogate {

/// Little helpers for the FQML container; values are written in host byte order.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <class T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void doubles(const std::vector<double>& v) {
    pod<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void matrix(const Eigen::MatrixXd& m) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw ParseError("truncated model file", 0);
    return v;
  }
  std::string str() {
    const auto n = checked_size(pod<std::uint64_t>());
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw ParseError("truncated model file", 0);
    return s;
  }
  std::vector<double> doubles() {
    const auto n = checked_size(pod<std::uint64_t>());
    std::vector<double> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) throw ParseError("truncated model file", 0);
    return v;
  }
  Eigen::MatrixXd matrix() {
    const auto r = checked_size(pod<std::uint64_t>());
    const auto c = checked_size(pod<std::uint64_t>());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(r * c * sizeof(double)));
    if (!in_) throw ParseError("truncated model file", 0);
    return m;
  }

 private:
  static std::size_t checked_size(std::uint64_t n) {
    if (n > (1ULL << 32)) throw ParseError("corrupt model file: implausible length", 0);
    return static_cast<std::size_t>(n);
  }
  std::istream& in_;
};

}  // namespace fq::surrogate
