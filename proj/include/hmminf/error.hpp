#pragma once

#include <stdexcept>
#include <string>

namespace hmminf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimensions, out-of-range
/// window, unnormalized probabilities, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input document or data file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Inference could not proceed numerically: zero-probability evidence,
/// or EM degenerate in every restart.
class NumericError : public Error {
public:
    using Error::Error;
};

class ImpossibleEvidence : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace hmminf
