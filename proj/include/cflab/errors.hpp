#pragma once

#include <stdexcept>
#include <string>

namespace cflab {

// Invalid or inconsistent configuration (bad group spec, bad parameter range,
// malformed boundary data, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A configured resource cap (ball size, table size, pair scan budget, integer
// overflow in exact counts, ...) would be exceeded.  The message names the
// offending quantity.
class ResourceLimitError : public std::runtime_error {
 public:
  explicit ResourceLimitError(const std::string& what)
      : std::runtime_error(what) {}
};

// Solver failed to reach its tolerances within the sweep budget.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace cflab
