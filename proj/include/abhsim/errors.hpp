#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace abhsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A quantity is evaluated outside the range where it is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A requested allocation exceeds a configured limit.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// Amplitude would land outside the truncated Fock space.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// Operands live on different bases or have incompatible shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite values appeared while integrating.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Integration finished but a quality budget (trace drift, positivity) was blown.
class IntegrationQualityError : public Error {
public:
    using Error::Error;
};

/// An internal invariant (e.g. number-sector confinement) was violated.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// IO failure with the offending path in the message.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace abhsim
