#pragma once

#include <stdexcept>
#include <string>

namespace fvdp {

enum class ErrorKind {
  invalid_state,      // nonfinite or out-of-domain input
  precondition,       // caller violated a documented precondition
  no_branch,          // no attracting branch of C at the requested y
  step_budget,        // integrator ran out of steps or time horizon
  step_underflow,     // step size collapsed (stiffness failure)
  nonfinite_state,    // integration produced NaN/Inf
  root_refinement,    // event root could not be refined
  tangency,           // section crossing is (numerically) tangential
  nondeterminism,     // hybrid flow hit a folded singularity without a policy
  no_convergence,     // iterative procedure failed to settle
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fvdp
