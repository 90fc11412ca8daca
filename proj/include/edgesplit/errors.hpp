#pragma once

#include <stdexcept>
#include <string>

namespace edgesplit {

// Input that fails a documented invariant (config files, scenario files, CLI values).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition. Indicates a bug, not bad input.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A decision violates one of the problem constraints (C1..C4, B_max).
class ConstraintError : public ContractError {
 public:
  ConstraintError(std::string constraint, const std::string& what)
      : ContractError(constraint + ": " + what), constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

}  // namespace edgesplit
