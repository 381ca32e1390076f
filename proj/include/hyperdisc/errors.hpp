#pragma once

#include <stdexcept>
#include <string>

namespace hyperdisc {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid numeric input (non-positive stretch, non-orthonormal frame, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Inconsistent or unsupported configuration (alpha = 0, unknown mode, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Degenerate data or model (all-zero block, empty active set, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

} // namespace hyperdisc
