#pragma once

#include <stdexcept>
#include <string>

namespace bflux {

// Error categories aligned with the CLI exit codes:
// config = 1, data = 2, privacy = 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PrivacyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bflux
