#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flexpipe {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A pipeline depth that does not divide the array rows and columns.
class DivisibilityError : public Error {
public:
    using Error::Error;
};

/// A depth the array or the clock model cannot run at.
class UnsupportedModeError : public Error {
public:
    using Error::Error;
};

/// Matrix dimensions inconsistent with the array or with each other.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Operand outside the representable input range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Closed-form expression with no finite value for the given inputs.
class DomainError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, std::size_t column, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          source_(std::move(source)),
          line_(line),
          column_(column) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::string source_;
    std::size_t line_;
    std::size_t column_;
};

}  // namespace flexpipe
