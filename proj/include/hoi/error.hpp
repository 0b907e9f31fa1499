#pragma once

#include <stdexcept>
#include <string>

namespace hoi {

// Base of every error raised by the toolkit. The CLI maps any of these to a
// nonzero exit status and prints what() to stderr.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input does not follow the expected file format (bad JSON, bad magic, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input parses but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Binary archive ended before the declared record count.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

// A key (embedding, image id, category) is absent.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Two inputs that must correspond one-to-one do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace hoi
