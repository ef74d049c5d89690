#pragma once

#include <stdexcept>
#include <string>

namespace selfdual {

// Each class maps to one CLI exit code (see cli.hpp).

/// Malformed input: config, expression, grid parameters. Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical hypothesis of the requested problem fails on the grid. Exit code 3.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solve did not reach its tolerance. Exit code 4.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace selfdual
