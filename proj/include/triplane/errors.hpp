#pragma once

#include <stdexcept>

namespace triplane {

// Failure classes surfaced across the library boundary. The CLI maps these
// to exit codes (config 2, io 3, numeric 4); precondition violations on
// in-memory data use std::invalid_argument.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace triplane
