#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace svl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments violate an operation's preconditions (shape, range, NaN/Inf).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but numerically degenerate (zero or rank-deficient
/// latent matrix, and so on).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A data or model file could not be parsed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_ = 0;
};

/// A model file has a foreign magic tag or an unsupported version.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace svl
