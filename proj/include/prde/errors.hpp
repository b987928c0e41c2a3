#pragma once

#include <stdexcept>
#include <string>

namespace prde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A time or index that is not a grid point, or a malformed query range.
class InvalidQuery : public Error {
public:
    using Error::Error;
};

/// An argument outside the admissible range (p < 1, q' >= q, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Exponent chain or solver configuration that fails validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Starting point outside the closed domain, grid mismatch between paths.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operation not available for the given domain kind.
class UnsupportedDomain : public Error {
public:
    using Error::Error;
};

/// Iterative procedure failed to converge.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries 1-based line and column.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace prde
