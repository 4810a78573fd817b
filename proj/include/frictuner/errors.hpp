#pragma once

#include <stdexcept>
#include <string>

namespace frictuner {

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a chain leaves the admissible region; carries the epoch at
/// which the blow-up was detected.
struct DivergenceError : std::runtime_error {
  long epoch;
  DivergenceError(const std::string& what, long epoch_)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch_) + ")"),
        epoch(epoch_) {}
};

}  // namespace frictuner
