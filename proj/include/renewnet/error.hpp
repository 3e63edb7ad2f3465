#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace renewnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression source. `offset` is the 0-based byte offset of the
/// offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Division by zero, 0^negative or a non-finite result during evaluation.
class EvalError : public Error {
public:
    using Error::Error;
};

/// Schema or validation failure while building a model.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a solver (ODE, quadrature, time stepping, fixed point).
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace renewnet
