#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dermo {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (bad records, bad config, bad manifest).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Structured text input could not be parsed; carries the 1-based line.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Encoded image bytes are malformed or truncated.
class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : Error("decode error at byte offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// mask_bbox found no foreground pixel.
class EmptyMaskError : public Error {
 public:
  EmptyMaskError() : Error("empty mask") {}
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}
}  // namespace detail

}  // namespace dermo
