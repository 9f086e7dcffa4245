#pragma once

#include <stdexcept>
#include <string>

namespace relprop {

// Malformed config file or bad option value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or inconsistent data files, infeasible dataset requests.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values produced where finite ones are required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace relprop
