#pragma once

#include <stdexcept>
#include <string>

namespace deepjam {

// Error categories map to CLI exit codes (see tools/).
enum class ErrorCategory { validation = 2, runtime = 3, convergence = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message)
        : Error(ErrorCategory::validation, message) {}
};

class RuntimeError : public Error {
public:
    explicit RuntimeError(const std::string& message)
        : Error(ErrorCategory::runtime, message) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& message)
        : Error(ErrorCategory::convergence, message) {}
};

}  // namespace deepjam
