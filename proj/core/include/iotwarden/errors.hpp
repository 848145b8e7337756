#pragma once

#include <stdexcept>
#include <string>

namespace warden {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input data; carries the offending file and 1-based line when known.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& msg)
        : Error(path + ":" + std::to_string(line) + ": " + msg), path_(path), line_(line) {}
    explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

/// Bad configuration: unknown format ids, invalid option values, overlapping segments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input columns do not cover the canonical feature schema, or versions disagree.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A caller violated a documented precondition (negative dt, non-finite sample, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Training diverged or could not run.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Threshold/window calibration could not satisfy its target.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// File missing, unreadable, truncated or otherwise corrupt.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace warden
