#pragma once

#include <stdexcept>
#include <string>

namespace wkbp {

// Base class for all library errors so callers can catch wkbp::Error
// without pulling in every specific type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- autodiff ----
struct ShapeMismatchError : Error {
    explicit ShapeMismatchError(const std::string& msg) : Error(msg) {}
};
struct NonScalarLossError : Error {
    explicit NonScalarLossError(const std::string& msg) : Error(msg) {}
};
struct NonFiniteError : Error {
    explicit NonFiniteError(const std::string& msg) : Error(msg) {}
};

// ---- signal pipeline ----
struct MalformedFileError : Error {
    explicit MalformedFileError(const std::string& msg) : Error(msg) {}
};
struct EmptyRecordError : Error {
    explicit EmptyRecordError(const std::string& msg) : Error(msg) {}
};
struct NoBeatsError : Error {
    explicit NoBeatsError(const std::string& msg) : Error(msg) {}
};
struct WindowTooShortError : Error {
    explicit WindowTooShortError(const std::string& msg) : Error(msg) {}
};
struct DegenerateChannelError : Error {
    explicit DegenerateChannelError(const std::string& msg) : Error(msg) {}
};
struct TooFewBeatsError : Error {
    explicit TooFewBeatsError(const std::string& msg) : Error(msg) {}
};

// ---- training / metrics ----
struct EmptyInputError : Error {
    explicit EmptyInputError(const std::string& msg) : Error(msg) {}
};
struct TooFewSamplesError : Error {
    explicit TooFewSamplesError(const std::string& msg) : Error(msg) {}
};
struct AllStepsSkippedError : Error {
    explicit AllStepsSkippedError(const std::string& msg) : Error(msg) {}
};

// ---- cli / config ----
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace wkbp
