#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecx {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data or configuration. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public InputError {
public:
    using InputError::InputError;
};

/// A numerical procedure could not produce a result. Exit code 1.
class ComputationError : public Error {
public:
    using Error::Error;
};

/// Matrix structure prevents the computation (empty rows/columns, too small).
class StructuralError : public ComputationError {
public:
    using ComputationError::ComputationError;
};

}  // namespace ecx
