#pragma once

#include <stdexcept>
#include <string>

namespace graylearn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not compose.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A non-finite value showed up where a finite one is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Class index outside {0, ..., K-1}.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Precondition on the arguments of a call was violated.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A pool holds fewer items than were requested from it.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Malformed text input (CSV, config). Message carries the row/line.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Checkpoint file is corrupt, truncated or of another version.
class LoadError : public Error {
public:
    using Error::Error;
};

/// A stratified split would leave a class without training samples.
class StratificationError : public Error {
public:
    using Error::Error;
};

}  // namespace graylearn
