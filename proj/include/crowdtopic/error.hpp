#pragma once

#include <stdexcept>
#include <string>

namespace crowdtopic {

/// Input or configuration rejected before or during processing. The CLI maps
/// these to exit code 1; every other exception is a runtime failure (exit 2).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A required field is missing or has the wrong JSON type.
class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A precondition on an argument (range, size, shape) does not hold.
class ArgumentError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Feature vectors, matrices or trained artifacts disagree on their slot layout.
class LayoutError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A serialized model was loaded against a vocabulary it was not trained on.
class FingerprintMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace crowdtopic
