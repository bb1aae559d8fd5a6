#pragma once

#include <stdexcept>
#include <string>

namespace svddsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV/JSON) or I/O failure.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A parameter or argument violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The dual solver stopped before reaching the requested tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double best_violation)
      : Error(what), best_violation_(best_violation) {}
  double best_violation() const noexcept { return best_violation_; }

 private:
  double best_violation_;
};

}  // namespace svddsel
