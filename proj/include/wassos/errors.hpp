#pragma once

#include <stdexcept>
#include <string>

namespace wassos {

// Problems with input data content (corpus files, checkpoints, targets).
// The CLI maps these to exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Problems with configuration or usage. The CLI maps these to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wassos
