#pragma once

#include <stdexcept>
#include <string>

namespace stepdp {

// Base class for every error raised by the library. The CLI maps each
// subclass to its own exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument or shape mismatch supplied by a caller.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed input file; the message names the file and the field.
class ParseError : public Error {
public:
    using Error::Error;
};

// No valid assignment exists (unassignable query, too many queries for the clip grid, ...).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// An internal invariant was found broken, e.g. a DP assignment that overlaps.
class InvariantError : public Error {
public:
    using Error::Error;
};

} // namespace stepdp
