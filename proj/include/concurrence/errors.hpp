#pragma once

#include <stdexcept>
#include <string>

namespace concurrence {

/// Problems with input data or on-disk artifacts: missing files, malformed
/// formats, shape/length mismatches, violated preconditions.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values or numerically unusable state encountered mid-computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace concurrence
