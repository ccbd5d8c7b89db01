#pragma once

#include <stdexcept>
#include <string>

namespace spherear {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operands live in different spaces (length or quadrature-weight mismatch).
struct DimensionError : Error {
  using Error::Error;
};

// Input outside the mathematical domain of an operation
// (antipodal points, negative composition parts, point not in H+).
struct DomainError : Error {
  using Error::Error;
};

// Numerically meaningless fit or projection (zero autocovariance,
// all-identical samples, clipped vector identically zero).
struct DegenerateError : Error {
  using Error::Error;
};

// An iterative procedure stopped short of its tolerance; `achieved`
// carries the final gradient norm / tail magnitude.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double achieved_value)
      : Error(what), achieved(achieved_value) {}
  double achieved;
};

// Unreadable or malformed input file; message carries file/line context.
struct FormatError : Error {
  using Error::Error;
};

// Model file written by an unsupported format version.
struct ModelVersionError : Error {
  using Error::Error;
};

// Non-stationary coefficients where a stationary model is required.
struct StationarityError : Error {
  using Error::Error;
};

}  // namespace spherear
