#pragma once

#include <stdexcept>
#include <string>

namespace ionshuttle {

// Raised for malformed inputs: bad configs, violated preconditions the caller
// could have checked. The CLI maps these to exit code 2.
struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when the numerics give up: singular matrices, lost positive
// definiteness, non-convergence. The CLI maps these to exit code 3.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ionshuttle
