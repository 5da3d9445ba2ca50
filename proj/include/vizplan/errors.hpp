#ifndef VIZPLAN_ERRORS_HPP
#define VIZPLAN_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vizplan {

//! Base class for every error thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

//! File could not be opened, read or written.
struct IoError : Error {
    using Error::Error;
};

//! Data does not match a declared or inferred schema.
struct SchemaError : Error {
    using Error::Error;
};

//! Text could not be parsed. `offset` is the byte position of the failure.
struct ParseError : Error {
    size_t offset;
    ParseError(const std::string &msg, size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
};

//! Document parsed but violates a structural rule (dangling reference,
//! duplicate name, field missing from an upstream schema, ...).
struct ValidationError : Error {
    using Error::Error;
};

//! A transform received input it cannot process.
struct TransformError : Error {
    using Error::Error;
};

//! Query execution failed (bad plan state, unknown table, ...).
struct ExecError : Error {
    using Error::Error;
};

//! Bad command line or configuration input.
struct ConfigError : Error {
    using Error::Error;
};

//! A dataset lacks a field role that a dashboard template requires.
struct IncompatibleDataset : Error {
    using Error::Error;
};

//! A ratio metric hit a zero denominator.
struct DivisionByZero : Error {
    using Error::Error;
};

} // namespace vizplan

#endif
