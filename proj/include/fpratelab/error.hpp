#pragma once

#include <stdexcept>
#include <string>

namespace fpl {

/// A numerical kernel failed to meet its postcondition (non-convergence,
/// non-irreducible operator, loss of positivity). Preconditions violated by
/// the caller raise std::invalid_argument instead.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

}  // namespace fpl
