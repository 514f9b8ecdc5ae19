#pragma once
#include <stdexcept>
#include <string>

namespace gsinfonce {

enum class ErrorKind {
    DimensionMismatch,
    ZeroNorm,
    InvalidConfig,
    InvalidTemperature,
    EmptyMatrix,
    NonFiniteInput,
    TokenOutOfRange,
    EmptySequence,
    LengthMismatch,
    DegenerateInput,
    BatchTooSmall,
    SourceExhausted,
    Divergence,
    IoError,
    ParseError,
    ToleranceFailure,
};

// Single exception type for the whole library; `kind` drives the CLI
// exit-code mapping and lets tests assert on the failure class.
class GsError : public std::runtime_error {
public:
    GsError(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ZeroNorm: return "ZeroNorm";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::InvalidTemperature: return "InvalidTemperature";
        case ErrorKind::EmptyMatrix: return "EmptyMatrix";
        case ErrorKind::NonFiniteInput: return "NonFiniteInput";
        case ErrorKind::TokenOutOfRange: return "TokenOutOfRange";
        case ErrorKind::EmptySequence: return "EmptySequence";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::BatchTooSmall: return "BatchTooSmall";
        case ErrorKind::SourceExhausted: return "SourceExhausted";
        case ErrorKind::Divergence: return "Divergence";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ToleranceFailure: return "ToleranceFailure";
    }
    return "Unknown";
}

} // namespace gsinfonce
