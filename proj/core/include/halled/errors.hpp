#pragma once

#include <stdexcept>
#include <string>

namespace halled {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError    -> 2   (bad input / validation failure)
//   MultipletError -> 3   (no gapped multiplet found)
//   ToleranceError -> 4   (numerical tolerance violated)
//   ResourceError  -> 5   (problem too large / cache unusable)
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MultipletError : std::runtime_error {
  explicit MultipletError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ToleranceError : std::runtime_error {
  explicit ToleranceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace halled
