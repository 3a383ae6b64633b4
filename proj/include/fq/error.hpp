#pragma once

#include <stdexcept>
#include <string>

namespace fq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input lies outside the mathematical domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A configuration at which the potential is not finite (e.g. coincident LJ particles).
class SingularConfiguration : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Numerical integration blew up.
class UnstableIntegration : public Error {
 public:
  UnstableIntegration(const std::string& what, std::size_t step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace fq
