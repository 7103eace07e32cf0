#pragma once

#include <stdexcept>
#include <string>

namespace fmcw {

/// Base of every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters (non-positive bandwidth, bad CFAR window, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Physically impossible scenario state, e.g. a reflector passing through the radar.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// Attack schedule that cannot produce what was asked for.
class PlanError : public Error {
 public:
  using Error::Error;
};

/// Root finding or estimation failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Phase difference maps outside [-1, 1] before the arcsin.
class AmbiguousAngleError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fmcw
