#pragma once

#include <stdexcept>
#include <string>

namespace specsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (ragged rows, unparsable numbers, missing header).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Data that parses but violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A caller-side contract was not met (bad argument, missing target, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The B-spline design matrix is rank deficient on the given wavelength grid.
class SingularDesignError : public Error {
public:
    using Error::Error;
};

/// Deleting one wavelength leaves the least-squares fit underdetermined.
class IllPosedLooError : public Error {
public:
    using Error::Error;
};

/// Invalid pipeline configuration (unknown key, bad value, missing file).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised by a pipeline stage; the message is prefixed with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace specsel
