#pragma once

#include <stdexcept>

namespace normtop {

// A user-facing parameter is outside its admissible domain
// (Poisson ratio, filter radius, mesh size, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A documented data invariant or precondition does not hold
// (density out of bounds, non-symmetric stiffness, ...).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The reduced stiffness system could not be factorized or solved,
// typically because the supports leave rigid-body motion free.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative search (the OC volume bisection) ran out of iterations
// before meeting its tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace normtop
