#pragma once

#include <stdexcept>

namespace risloc {

/// Invalid or unsupported spatial configuration (points behind the RIS,
/// cosines outside their domain, overlapping cells, ...).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A position coincides with the RIS reference point, where range and
/// direction are undefined.
class OriginError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class OverlapError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class DegenerateLayout : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// The model vector has zero energy, so neither the gain nor the
/// projection is defined.
class ZeroModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linearised least-squares system is rank deficient.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace risloc
