#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace malflows {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input syntax. `line` is 1-based (0 when unknown), `offset` is the
// byte offset within that line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t offset)
        : Error(what), line_(line), offset_(offset) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

// Well-formed input that violates the record or file schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public Error {
public:
    DuplicateIdError(const std::string& id, std::size_t first_line, std::size_t second_line)
        : Error("duplicate app_id '" + id + "' on lines " + std::to_string(first_line) + " and " +
                std::to_string(second_line)),
          first_(first_line),
          second_(second_line) {}

    std::size_t first_line() const noexcept { return first_; }
    std::size_t second_line() const noexcept { return second_; }

private:
    std::size_t first_;
    std::size_t second_;
};

}  // namespace malflows
