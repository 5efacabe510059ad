#pragma once

#include <stdexcept>
#include <string>

namespace npp {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
    using Error::Error;
};

// File or stream problems (CLI exit code 3).
class IoError : public Error {
    using Error::Error;
};

// Tensor / layer shape inconsistencies.
class ShapeError : public Error {
    using Error::Error;
};

// Model or dataset file format violations: bad magic, unsupported version,
// truncated payload. Each site raises a distinct message.
class FormatError : public Error {
    using Error::Error;
};

// Probe data overlaps the model's training fingerprint (CLI exit code 4).
class ZeroShotError : public Error {
    using Error::Error;
};

} // namespace npp
