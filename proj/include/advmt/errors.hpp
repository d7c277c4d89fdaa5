#pragma once

#include <stdexcept>

namespace advmt {

// Malformed or unreadable input data (corpora, eval files, checkpoints).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or command-line usage.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or gradient.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace advmt
