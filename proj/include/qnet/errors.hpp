#pragma once

#include <stdexcept>
#include <string>

namespace qnet {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iterative scheme exceeded its iteration cap. For the sigma root solve
/// this usually means the offered load is >= 1 or the LST is malformed.
struct NonConvergence : Error {
    using Error::Error;
};

/// A direct linear solve hit a (numerically) singular system, e.g. a
/// reducible chain with no unique stationary vector.
struct SingularSystem : Error {
    using Error::Error;
};

/// Adaptive quadrature could not meet the requested error bound.
struct QuadratureFailure : Error {
    using Error::Error;
};

/// A generated transition-matrix row failed the stochasticity check;
/// signals working-precision exhaustion.
struct StochasticityViolation : Error {
    using Error::Error;
};

/// A recursion divisor underflowed to zero at working precision.
struct DivisionHazard : Error {
    using Error::Error;
};

/// A derived probability came out negative beyond tolerance.
struct NegativeProbability : Error {
    using Error::Error;
};

/// A rejection policy was combined with an incompatible buffer mode.
struct PolicyError : Error {
    using Error::Error;
};

/// A transition-probability request fell in no region (internal logic error).
struct RegionError : Error {
    using Error::Error;
};

/// A batch law concentrated all mass at size zero.
struct DegenerateBatch : Error {
    using Error::Error;
};

/// Simulation horizon too small for the requested tallies.
struct InvalidHorizon : Error {
    using Error::Error;
};

/// Malformed configuration file.
struct ParseError : Error {
    using Error::Error;
};

/// Well-formed configuration with invalid field values.
struct ValidationError : Error {
    using Error::Error;
};

/// Filesystem failure while emitting results.
struct IoError : Error {
    using Error::Error;
};

}  // namespace qnet
