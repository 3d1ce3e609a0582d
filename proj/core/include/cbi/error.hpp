#pragma once

#include <stdexcept>
#include <string>

namespace cbi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Sampling was requested from a region of zero mass.
class EmptyRegion : public Error {
 public:
  using Error::Error;
};

/// Sampling was requested from a region of infinite mass.
class InfiniteMass : public Error {
 public:
  using Error::Error;
};

class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

class Overflow : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Malformed parameter or scenario file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace cbi
