#pragma once

#include <stdexcept>
#include <string>

namespace stemtune {

/// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Linear-algebra breakdown that survived jitter escalation (CLI exit code 3).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Requested aberration state lies outside the configured search bounds.
class OutOfBounds : public std::invalid_argument {
 public:
  explicit OutOfBounds(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace stemtune
