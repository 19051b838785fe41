#pragma once

#include <stdexcept>
#include <string>

namespace dect {

// All library failures derive from dect::Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function (e.g. non-positive energy).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Array shapes disagree with each other or with the scan geometry.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Forward model result is not representable.
class SaturationError : public Error {
 public:
  SaturationError(const std::string& what, double max_projection)
      : Error(what), max_projection_(max_projection) {}
  double max_projection() const noexcept { return max_projection_; }

 private:
  double max_projection_;
};

// CG curvature p'Ap <= 0 on a system that should be SPD.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dect
