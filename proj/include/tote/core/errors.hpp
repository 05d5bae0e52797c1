#pragma once

#include <stdexcept>
#include <string>

namespace tote {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, checkpoint 4,
// divergence 5. Anything else that escapes is a plain runtime error (exit 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tote
