#pragma once

#include <stdexcept>
#include <string>

namespace lts {

// Bad parameters or options. CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal invariant failed. CLI exit code 3.
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace lts
