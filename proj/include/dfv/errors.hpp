#pragma once

#include <stdexcept>
#include <string>

namespace dfv {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (bad RIFF chunk, truncated TextGrid, ...).
struct FormatError : Error {
    using Error::Error;
};

// Recognized container but an encoding we do not decode.
struct UnsupportedFormatError : FormatError {
    using FormatError::FormatError;
};

// Text parse failure; carries the 1-based line number.
struct ParseError : Error {
    int line;
    ParseError(const std::string& msg, int line_no)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

// Bad configuration value or combination.
struct ConfigError : Error {
    using Error::Error;
};

// Caller violated an interface contract (dimension mismatch, empty list, ...).
struct ContractError : Error {
    using Error::Error;
};

// Numerical routine failed (non-convergence, singular system).
struct NumericError : Error {
    using Error::Error;
};

// Not enough observations to fit or evaluate.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Input is degenerate for the requested analysis (e.g. all-zero frame).
struct DegenerateInputError : Error {
    using Error::Error;
};

}  // namespace dfv
