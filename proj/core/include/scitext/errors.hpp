#pragma once

#include <stdexcept>
#include <string>

namespace scitext {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A pipeline stage was invoked before its upstream artifact exists.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Unknown record-format tag or a file that cannot be parsed as the claimed format.
class FormatError : public Error {
public:
    using Error::Error;
};

// Violated operation precondition or domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Non-finite loss during fine-tuning; the current learning-rate trial is aborted.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double learning_rate)
        : Error(what), learning_rate_(learning_rate) {}

    double learning_rate() const { return learning_rate_; }

private:
    double learning_rate_;
};

} // namespace scitext
