#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gridadv {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Index or count out of range.
class BoundsError : public Error {
public:
    using Error::Error;
};

/// Invalid architecture, hyperparameters, or experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation precondition (stale cache, non one-hot target, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `line()` is 1-based; 0 when the error is not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Training produced a non-finite loss.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// A statistic is undefined on the given input (e.g. MAPE with all-zero references).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

}  // namespace gridadv
