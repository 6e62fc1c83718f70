#pragma once

#include <stdexcept>
#include <string>

namespace coord {

// Thrown when a factor conditions on a variable that was never introduced,
// or when two operands disagree on their variable lists.
struct VariableMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ShapeMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A distribution violates the structural conditions of its setting.
struct AdmissibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The covering/packing rate interval is void for the given slack.
struct RateWindowEmptyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No optimizer candidate reached the requested feasibility tolerance.
struct InfeasibleSearchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An exhaustive search or codebook would exceed the configured size guard.
struct SizeGuardError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace coord
