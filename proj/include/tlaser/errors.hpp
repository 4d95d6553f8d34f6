#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tlaser {

// Precondition or shape/contract violation in a library call.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical kernel failed (non-converged SVD, breakdown that cannot be
// handled, non-finite intermediate).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or container-format failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed TNS payload. `offset` is the byte offset where parsing failed.
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : IoError(what + " (at byte offset " + std::to_string(offset) + ")"),
        message_(what),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::uint64_t offset_;
};

// Invalid manifest or compression configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tlaser
