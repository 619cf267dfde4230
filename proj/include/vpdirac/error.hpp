#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vpdirac {

/// Precondition violated by a caller-supplied argument.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A field or potential was requested at (or too close to) a singular point.
class NearSingularity : public std::runtime_error {
 public:
  NearSingularity(const std::string& what, std::size_t index, double distance)
      : std::runtime_error(what), index_(index), distance_(distance) {}

  /// Index of the offending source or target, or npos when not applicable.
  std::size_t index() const noexcept { return index_; }
  double distance() const noexcept { return distance_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t index_;
  double distance_;
};

/// Two flow records cannot be compared seed by seed.
class SeedMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line + 1) + ": " + what : what), line_(line) {}

  /// Zero-based line of the offending entry, -1 if unknown.
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace vpdirac
