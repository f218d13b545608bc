#pragma once

#include <stdexcept>
#include <string>

namespace coretri {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A 3D point lies on or behind a camera's principal plane.
struct CheiralityViolation : Error {
  using Error::Error;
};

// No iterate satisfying all cheirality constraints could be found.
struct CheiralityCollapse : Error {
  using Error::Error;
};

// Observing geometry does not constrain the point (rank-deficient system).
struct DegenerateGeometry : Error {
  using Error::Error;
};

// An iteration/evaluation budget was exhausted before convergence.
struct BudgetExhausted : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

// Synthetic generation could not satisfy cheirality after many resamples.
struct GeometryRetryExhausted : Error {
  using Error::Error;
};

// Requested labels/metadata are not present on the instance.
struct MissingMetadata : Error {
  using Error::Error;
};

// Outlier removal ran out of data before meeting the inlier threshold.
struct Exhausted : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_number(line) {}
  int line_number;
};

}  // namespace coretri
