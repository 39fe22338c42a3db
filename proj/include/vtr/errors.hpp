#pragma once

#include <stdexcept>
#include <string>

namespace vtr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class BlockSizeMismatch : public Error {
 public:
  using Error::Error;
};

class ShiftTooLarge : public Error {
 public:
  using Error::Error;
};

class DivisibilityError : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// Head boundaries that do not line up with the block grid.
class PartitionError : public Error {
 public:
  using Error::Error;
};

// File-format errors. Each malformed-file class has its own type so callers
// (and tests) can tell them apart.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedPayload : public FormatError {
 public:
  using FormatError::FormatError;
};

class ShapeInconsistent : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vtr
