#pragma once

#include <stdexcept>
#include <string>

namespace viewcal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimensions, negative mass, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Geometry that cannot be resolved (coincident look-at points, parallel 6D columns).
class DegenerateInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A computation left the representable range or produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace viewcal
