#pragma once

#include <stdexcept>
#include <string>

namespace vevo {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed input or violated precondition. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too few observations for the requested computation. CLI exit code 3.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values or a failed solve during iteration. CLI exit code 4.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vevo
