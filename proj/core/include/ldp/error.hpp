#pragma once

#include <stdexcept>
#include <string>

namespace ldp {

/// Base class for all errors raised by the library. `code()` is a short
/// machine-readable tag that the CLI prints verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

/// The requested work exceeds a hard compute or memory budget.
class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& what) : Error("budget", what) {}
};

/// A numerical routine failed (e.g. a factorization).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error("numerical", what) {}
};

/// A four-arm calibration was required but is missing or unusable.
class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& what) : Error("calibration", what) {}
};

}  // namespace ldp
