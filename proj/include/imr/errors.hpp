#pragma once

#include <stdexcept>
#include <string>

namespace imr {

/// Malformed caller input: out-of-range indices, non-finite values,
/// inconsistent lengths, bad configuration.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The p-by-p normal-equation system has no usable pivot; the caller
/// decides the fallback (the repair engine substitutes an all-zero phi).
class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Labeled diffs carry no information (all zero) where a ratio of their
/// products is required.
class DegenerateLabels : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The damped fixpoint iteration for the converged-parameter equation did
/// not settle within its step cap.
class NoFixpoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace imr
