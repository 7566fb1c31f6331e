#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cellmap {

// Exception families map one-to-one onto CLI exit codes (see tools/).

/// Bad input data: malformed files, invalid records, missing artifacts.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed structured text, with the offending position.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t byte, std::size_t line)
        : DataError(what + " (line " + std::to_string(line) + ", byte " + std::to_string(byte) + ")"),
          byte_(byte),
          line_(line)
    {
    }

    std::size_t byte() const noexcept { return byte_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t byte_;
    std::size_t line_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No split satisfying the requested constraints could be found.
class InfeasibleSplit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cellmap
