#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qcomp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract user input (unknown symbol, bad file, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver gave up. Carries the last iteration count and residual.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t iterations, double residual)
      : Error(what + " (iterations=" + std::to_string(iterations) +
              ", residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

/// Leading transfer eigenvalue is (numerically) degenerate.
class DegeneracyError : public Error {
 public:
  DegeneracyError(double leading, double second)
      : Error("leading transfer eigenvalue is degenerate: |eta0|=" + std::to_string(leading) +
              ", |eta1|=" + std::to_string(second)),
        leading_(leading),
        second_(second) {}

  double leading() const noexcept { return leading_; }
  double second() const noexcept { return second_; }

 private:
  double leading_;
  double second_;
};

/// Site tensors are not in the gauge an operation requires.
class GaugeError : public Error {
 public:
  using Error::Error;
};

/// A structural verification (dilation lemmas, bound certificates) failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace qcomp
