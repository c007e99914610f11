#pragma once

#include <stdexcept>
#include <string>

namespace sinbad {

/// Broad failure categories. The CLI maps each one onto its own exit code.
enum class ErrorKind {
    config,            // unusable configuration or flag combination
    data,              // malformed, missing or inconsistent input data
    degenerate_model,  // a statistical model could not be fit (e.g. zero covariance)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class DegenerateModelError : public Error {
public:
    explicit DegenerateModelError(const std::string& what)
        : Error(ErrorKind::degenerate_model, what) {}
};

/// Process exit code for an error category: 2 config, 3 data, 4 degenerate model.
inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::degenerate_model: return 4;
    }
    return 1;
}

}  // namespace sinbad
