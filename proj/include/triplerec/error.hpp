#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace triplerec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed call: empty vertex sets, too few labels, bad option values.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain precondition (unknown label,
/// duplicate gene id, condition (C) violated, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Syntax error in a Newick or TSV document. `position()` is the zero-based
/// byte offset into Newick text, or the one-based line number for TSV.
class ParseError : public InputError {
 public:
  ParseError(std::size_t position, const std::string& what, const char* unit = "position")
      : InputError("parse error at " + std::string(unit) + " " + std::to_string(position) + ": " + what),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Rejection sampling ran out of attempts.
class SimulationError : public Error {
 public:
  SimulationError(int attempts, const std::string& what)
      : Error(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

}  // namespace triplerec
