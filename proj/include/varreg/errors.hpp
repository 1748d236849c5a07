#pragma once

#include <stdexcept>
#include <string>

namespace varreg {

// Base for everything thrown by this library on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input document / expression text: bad syntax, unknown field,
// wrong shape.  Maps to CLI exit code 2.
struct SchemaError : Error {
  using Error::Error;
};

// Structurally valid input that violates a model invariant (reference point
// not on the graph, discontinuous f, rank mismatch...).  CLI exit code 3.
struct ModelError : Error {
  using Error::Error;
};

// An operation was asked to run outside its supported regime.  CLI exit 4.
struct PreconditionError : Error {
  using Error::Error;
};

// Geometry the exact kernels do not handle (too many pieces at a junction,
// non-invertible arc, ...).  Treated as a precondition failure.
struct UnsupportedGeometry : PreconditionError {
  using PreconditionError::PreconditionError;
};

// Enumeration / size guards.
struct CapExceeded : PreconditionError {
  using PreconditionError::PreconditionError;
};

// Dimension guard of the polyhedral feasibility kernel.
struct UnsupportedSize : PreconditionError {
  using PreconditionError::PreconditionError;
};

// A regularity check was invoked outside its assumption regime.
struct AssumptionError : PreconditionError {
  using PreconditionError::PreconditionError;
};

// Evaluating an expression outside its domain (sqrt of a negative, division
// by zero).  Usually converted into a ValidationError with location info.
struct DomainError : Error {
  using Error::Error;
};

// A piecewise function failed its construction-time audit.
struct ValidationError : ModelError {
  using ModelError::ModelError;
};

// Inconsistent matrix shapes during model assembly.
struct DimensionError : ModelError {
  using ModelError::ModelError;
};

// Two-sided derivative requested at a kink.
struct KinkError : Error {
  using Error::Error;
};

// Path tracking could not continue (step collapsed below the hard floor).
struct TrackingFailure : Error {
  using Error::Error;
};

// No admissible radius pair during uniform-constants estimation.
struct EstimationFailure : TrackingFailure {
  using TrackingFailure::TrackingFailure;
};

// Requested perturbation exceeds the stability margin of the tracked path.
struct PerturbationTooLarge : PreconditionError {
  using PreconditionError::PreconditionError;
};

}  // namespace varreg
