#pragma once

#include <stdexcept>
#include <string>

namespace modmon {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Graph has zero total edge weight; modularity is undefined.
struct EmptyGraphError : Error {
    using Error::Error;
};

// Matrix/vector shapes do not line up.
struct DimensionMismatchError : Error {
    using Error::Error;
};

// A numeric argument is outside its valid range (scale <= 0, bad bounds, ...).
struct InvalidArgumentError : Error {
    using Error::Error;
};

// Not enough observations to fit or tune.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Malformed file content; message names the offending line where possible.
struct ParseError : Error {
    using Error::Error;
};

// File declares a format version this build does not understand.
struct VersionMismatchError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Numeric failure during an experiment (degenerate Phase I variance, ...).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace modmon
