#pragma once

#include <stdexcept>

namespace bhsne {

// Malformed or unusable input data (exit code 2 in the CLI).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure during a computation (exit code 3 in the CLI).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bhsne
