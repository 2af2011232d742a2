#pragma once

#include <stdexcept>
#include <string>

namespace equitycells {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text: bad rational literal, bad JSON shape, duplicate row.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (empty set, zero cell, r ∉ (0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An allocation or cell-count constraint of an approximator is violated.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

/// A modelling precondition (disadvantage, genericity, gradedness, ...) does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The requested exhaustive computation exceeds its configured cap.
class ScaleError : public Error {
 public:
  using Error::Error;
};

/// A constructive operation produced a result that failed its own dominance check.
/// Always indicates a bug or a broken precondition.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace equitycells
