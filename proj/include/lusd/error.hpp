#pragma once

#include <stdexcept>
#include <string>

namespace lusd {

/// Base of every error raised by the library. The CLI maps each subclass
/// to its own exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value or file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that cannot be combined.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// The backend could not be reached. The only retryable category.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Malformed payload or protocol version mismatch.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// The backend answered with an error payload.
class BackendError : public Error {
public:
    BackendError(std::string code, const std::string& message)
        : Error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Prompt pair from which no edit tokens could be derived.
class PromptError : public Error {
public:
    using Error::Error;
};

/// File could not be read, decoded, or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lusd
