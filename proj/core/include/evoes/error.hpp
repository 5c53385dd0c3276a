#pragma once

#include <stdexcept>
#include <string>

namespace evoes {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad config key/value, dimension mismatch, violated
/// precondition. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Corrupt, truncated or version-mismatched checkpoint file.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// A gradient or loss became non-finite during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure, always carrying the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace evoes
