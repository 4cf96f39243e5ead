#pragma once

#include <stdexcept>
#include <string>

namespace polyalpha {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state or parameter set violates its invariants.
class InvalidState : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function (e.g. log of a non-positive number).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An exact computation would exceed its configured size limit.
class ResourceLimit : public Error {
public:
    ResourceLimit(const std::string& what, std::size_t attained)
        : Error(what + " (attained size " + std::to_string(attained) + ")"), attained_(attained) {}
    std::size_t attained() const noexcept { return attained_; }

private:
    std::size_t attained_;
};

/// Two routes to the same quantity disagree; signals a bug rather than bad input.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Root finding or another numerical procedure failed.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// API misuse: operations called out of order or on an inconsistent ledger.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Bad experiment configuration (missing file, unknown key, invalid value).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace polyalpha
