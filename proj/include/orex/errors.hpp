#pragma once

#include <stdexcept>
#include <string>

namespace orex {

// Thrown by the solver when |sum(c_j) - Gamma| / r >= 1, i.e. the quadrature
// mass drifts too far from the declared jump intensity for the fixed-point
// iteration to contract.  Shrinking the quadrature spacing fixes it.
class ContractionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when an assembled stencil carries a negative neighbour weight.
// After upwinding this can only happen through bad user callbacks
// (negative density, NaN coefficients).
class NonMonotoneStencil : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown by family-specific operations (e.g. the linear switching
// criterion) when the problem is not of the expected coefficient/payoff
// family.
class WrongFamily : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace orex
