#pragma once

#include <stdexcept>
#include <string>

namespace hades {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by bounds-checked byte readers on truncated or malformed input.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace hades
