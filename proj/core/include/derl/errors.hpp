#pragma once

#include <stdexcept>
#include <string>

namespace derl {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two distributions were expected to live on the same atom grid.
class AtomMismatchError : public Error {
 public:
  using Error::Error;
};

/// q assigns zero mass where p has positive mass, so KL/cross-entropy diverge.
class AbsoluteContinuityError : public Error {
 public:
  using Error::Error;
};

class EpsilonOutOfRangeError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class InvalidStateActionError : public Error {
 public:
  using Error::Error;
};

class NegativeEntropyError : public Error {
 public:
  using Error::Error;
};

/// The per-pair cross-entropy exceeded the configured bound M.
class EntropyUnboundedError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The exact remainder decomposition produced negative mass for this input;
/// the caller must fall back to a plain cross-entropy loss and log the event.
class ClippedDecompositionError : public Error {
 public:
  using Error::Error;
};

class CacheMismatchError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Config-file syntax or range violation; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

class UnknownKeyError : public ParseError {
 public:
  using ParseError::ParseError;
};

class MissingSectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace derl
