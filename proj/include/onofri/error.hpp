#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace onofri {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an input was violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// e^{2u} would overflow (2 max u > 700).
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// A quadrature node produced a non-finite value.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed. `trace` holds one line per iteration.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<std::string> trace)
      : Error(what), trace_(std::move(trace)) {}

  const std::vector<std::string>& trace() const { return trace_; }

 private:
  std::vector<std::string> trace_;
};

}  // namespace onofri
