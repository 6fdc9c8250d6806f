#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finsler_lab {

/// Malformed input text: expressions, scene files, CLI arguments.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t offset = npos)
      : std::runtime_error(what), offset_(offset) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Byte offset into the parsed text, or npos when not applicable.
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// A value left the domain of a function (sqrt of a negative, F <= 0, ...).
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The fundamental tensor failed strong convexity.
class ConvexityError : public DomainError {
public:
  using DomainError::DomainError;
};

/// A matrix that has to be inverted is numerically singular.
class SingularError : public DomainError {
public:
  using DomainError::DomainError;
};

/// The immersion Jacobian lost rank or the normal frame broke down.
class RankError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two independent evaluation paths disagreed beyond tolerance.
class ConsistencyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace finsler_lab
