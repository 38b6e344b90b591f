#pragma once

#include <stdexcept>
#include <string>

namespace latfuse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (template text, embedding binary, config file).
class ParseError : public Error
{
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what)
        , line_(line)
    {
    }

    /// 1-based line number, 0 when not line oriented.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace latfuse
