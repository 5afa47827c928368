#pragma once

#include <stdexcept>
#include <string>

namespace taser {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedConstellation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PilotNotInConstellation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonpositiveDiagonal : std::domain_error {
    using std::domain_error::domain_error;
};

struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Degenerate iterate: a column of V collapsed to (numerically) zero norm.
struct ZeroColumn : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchSpaceTooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UnknownDetector : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace taser
