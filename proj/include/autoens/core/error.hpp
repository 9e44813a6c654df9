#pragma once

#include <stdexcept>
#include <string>

namespace autoens {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: malformed files, bad arguments, violated preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace autoens
