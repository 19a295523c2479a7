#pragma once

#include <stdexcept>
#include <string>

namespace relstack {

// Malformed user-supplied data (files, CLI values). Mapped to exit code 1.
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration (thresholds, specs, schemas). Mapped to exit code 1.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition. Mapped to exit code 2.
class contract_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw contract_violation(message);
}

}  // namespace relstack
