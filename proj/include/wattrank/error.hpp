#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wattrank {

/// Process exit codes shared by every subcommand.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    validation = 2,
    metric_undefined = 3,
    provider = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::validation; }
};

class UsageError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

/// Input violates a documented precondition. `field()` names the offending
/// field when there is one.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message, std::string field = {})
        : Error(message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The metric's denominator is non-positive (electricity at or below 1 kWh).
class MetricUndefinedError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::metric_undefined; }
};

/// A telemetry source could not be opened or polled.
class ProviderError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::provider; }
};

/// The tracked child process could not be started.
class SpawnError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::provider; }
};

class NotFoundError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Malformed input text. `line()` is 1-based; the header is line 1.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& message, std::size_t line)
        : ValidationError(message + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DuplicateRunError : public ValidationError {
public:
    explicit DuplicateRunError(const std::string& run_id)
        : ValidationError("duplicate run_id '" + run_id + "'", "run_id") {}
};

class StoreBusyError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IncomparableRunsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace wattrank
