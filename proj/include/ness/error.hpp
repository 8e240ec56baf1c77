#pragma once

#include <stdexcept>
#include <string>

namespace ness {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller supplied a parameter outside its documented range.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input text could not be parsed (malformed CSV row, bad number).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input parsed but violates a data invariant (non-finite cell, wrong width).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (non-convergence, non-finite gradient).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace ness
