#pragma once

#include <stdexcept>
#include <string>

namespace partfilter {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constructor or operation received data violating a documented invariant.
/// `invariant()` names the violated rule so front ends can report it verbatim.
class InvariantError : public Error {
 public:
  InvariantError(std::string invariant, const std::string& detail)
      : Error("invariant violated: " + invariant + (detail.empty() ? "" : " (" + detail + ")")),
        invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// An iterative routine ran out of its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace partfilter
