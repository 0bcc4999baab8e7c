#pragma once

#include <stdexcept>
#include <string>

namespace rigspec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: expression syntax, JSON spec files, complex literals.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Vectors, spaces or operators living on different bases were combined.
class BasisMismatch : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The request is outside what the coefficient models can represent.
class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace rigspec
