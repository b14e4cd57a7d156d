#pragma once

#include <stdexcept>
#include <string>

namespace normlab {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Tensor shapes that cannot be combined or reduced.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// Too few elements to estimate batch statistics.
class DegenerateBatchError : public ShapeError {
  public:
    using ShapeError::ShapeError;
};

// Invalid layer, optimizer or experiment configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// An API called in the wrong state (e.g. backward on a cache it cannot use).
class UsageError : public Error {
  public:
    using Error::Error;
};

// Bad external input: labels, datasets, files.
class InputError : public Error {
  public:
    using Error::Error;
};

class FormatError : public InputError {
  public:
    using InputError::InputError;
};

} // namespace normlab
