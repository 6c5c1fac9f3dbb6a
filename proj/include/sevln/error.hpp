#pragma once

#include <stdexcept>
#include <string>

namespace sevln {

/// Root of every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, JSONL, config).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class InvalidActionError : public Error {
public:
    using Error::Error;
};

class UnreachableError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

/// Model or embedding service failure (transport exhaustion, script exhaustion).
class BackendError : public Error {
public:
    using Error::Error;
};

/// Misconfiguration detected before any work starts (missing API key, bad knob).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Backend produced an empty or unusable scene description.
class AnnotationError : public Error {
public:
    using Error::Error;
};

class EmbeddingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sevln
