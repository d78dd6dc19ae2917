#include "archattr/error.hpp"

namespace archattr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::UnknownLayerKind: return "UnknownLayerKind";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnexpectedField: return "UnexpectedField";
    case ErrorCode::DuplicateLayerName: return "DuplicateLayerName";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::Cycle: return "CycleError";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::KernelTooLarge: return "KernelTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ConvAfterFlatten: return "ConvAfterFlatten";
    case ErrorCode::PathExplosion: return "PathExplosion";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Config: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace archattr
