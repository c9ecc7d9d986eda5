#ifndef GAUSSKERN_ERRORS_HPP
#define GAUSSKERN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gausskern {

// Computation-level failures; bad arguments use std::invalid_argument.
struct ComputationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonContractiveError : ComputationError {
    using ComputationError::ComputationError;
};

struct InvariantViolation : ComputationError {
    using ComputationError::ComputationError;
};

struct FactorizationError : ComputationError {
    using ComputationError::ComputationError;
};

struct DegreeOverflow : ComputationError {
    using ComputationError::ComputationError;
};

} // namespace gausskern

#endif
