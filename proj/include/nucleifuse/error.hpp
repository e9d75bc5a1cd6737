#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nucleifuse {

// Base class for every error raised by the library. The CLI maps the
// subclasses below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, violated precondition or schema error (exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced during numerics (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

// A required upstream artifact is missing (exit code 4).
class DependencyError : public Error {
 public:
  using Error::Error;
};

// Corrupt binary file; carries the byte offset where parsing failed.
class FormatError : public InputError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : InputError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace nucleifuse
