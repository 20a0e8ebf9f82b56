#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqmatch {

// Error taxonomy shared by the whole engine. The CLI maps these onto its
// exit-code contract: validation-class errors exit 2, divergence exits 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument, config value or dataset content.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A cached record (tape, batch cache, forward record) does not belong to the
// parameters it is being used with.
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable/unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

// A numeric guard tripped (non-finite value where one must not appear).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Training diverged; `step` is the global step index at which it happened.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& msg, std::size_t step)
      : Error(msg), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace seqmatch
