#pragma once

#include <stdexcept>
#include <string>

namespace multiscale {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError     -> exit 2  (bad config file / schema / argument contract)
//   NumericError    -> exit 3  (non-finite values, failed internal checks)
//   InfeasibleError -> exit 4  (constraint targets no measure can attain)
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace multiscale
