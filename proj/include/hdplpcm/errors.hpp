#pragma once

#include <stdexcept>
#include <string>

namespace hdplpcm {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (edge lists, config files). Carries a line number
// when one is known.
struct ParseError : Error {
  explicit ParseError(const std::string& msg, long line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  long line_number;
};

// A value outside its documented domain (bad window, label out of range,
// shape mismatch, ...).
struct InvalidArgument : Error {
  using Error::Error;
};

// Missing/unwritable files and other I/O failures.
struct IoError : Error {
  using Error::Error;
};

// An operation produced an empty result where one is not allowed
// (e.g. degree filtering removed every actor).
struct EmptyResult : Error {
  using Error::Error;
};

// A sampling step hit an all-zero weight vector or another state that a
// correct sampler cannot reach; indicates a numerical bug upstream.
struct DegenerateDistribution : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required (failed initialization,
// diverged chain).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace hdplpcm
