#pragma once

#include <stdexcept>
#include <string>

namespace wnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed IDX input. The message names the offending header field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied parameter is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A requested split does not fit the available per-digit image counts.
class SplitError : public Error {
 public:
  using Error::Error;
};

/// A precondition of a distance or classification routine was violated
/// (empty class, every window excluded, malformed extension, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace wnn
